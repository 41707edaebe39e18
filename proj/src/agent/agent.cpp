#include "plugsim/agent/agent.hpp"

#include <algorithm>
#include <thread>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"

namespace plugsim::agent {

Agent::Agent(AgentConfig cfg) : cfg_(std::move(cfg)), log_(cfg_.agent_id) {}

Agent::~Agent() {
  if (client_) client_->close();
}

void Agent::bind(std::string pattern, Handler handler, std::string name) {
  bus::require_valid_topic(pattern);
  std::lock_guard lk(exec_mu_);
  if (client_) client_->subscribe(pattern);
  bindings_.push_back({std::move(pattern), std::move(name), std::move(handler)});
}

void Agent::unbind(const std::string& pattern) {
  std::lock_guard lk(exec_mu_);
  auto it = std::find_if(bindings_.begin(), bindings_.end(),
                         [&](const CallbackBinding& b) { return b.pattern == pattern; });
  if (it == bindings_.end()) return;
  bindings_.erase(it);
  if (client_) client_->unsubscribe(pattern);
}

void Agent::every(double period_s, Action action, std::string name) {
  auto period = period_ms(period_s);
  if (!(period_s > 0) || period <= 0) throw Error(Errc::ConfigInvalid, id() + ".heartbeat_s");
  std::lock_guard lk(exec_mu_);
  heartbeats_.push_back({period, std::move(name), std::move(action), 0, 0});
}

void Agent::start(std::shared_ptr<const Clock> clock, RetryPolicy retry) {
  clock_ = std::move(clock);
  client_ = std::make_unique<BusClient>(cfg_.agent_id, cfg_.bus_endpoint, retry);
  client_->connect();
  std::lock_guard lk(exec_mu_);
  on_start();
  for (const auto& b : bindings_) client_->subscribe(b.pattern);
  client_->sync();
}

void Agent::stop() {
  {
    std::lock_guard lk(exec_mu_);
    on_stop();
  }
  if (client_) client_->close();
}

std::int64_t Agent::now_ms() const {
  if (current_time_) return *current_time_;
  return clock_ ? clock_->now_ms() : 0;
}

PublishStatus Agent::publish(std::string_view topic, Json payload, bus::Headers headers) {
  return publish_at(now_ms(), topic, std::move(payload), std::move(headers));
}

PublishStatus Agent::publish_at(std::int64_t ts_ms, std::string_view topic, Json payload,
                                bus::Headers headers) {
  bus::require_valid_topic(topic);
  if (!client_) throw Error(Errc::BusDisconnected, id() + " not started");
  auto msg = bus::make_pub(std::string(topic), std::move(payload), id(), ts_ms, std::move(headers));
  return client_->publish(msg);
}

void Agent::log(LogLevel level, std::string_view message) { log_.log(now_ms(), level, message); }

void Agent::dispatch(const bus::MessageEnvelope& msg) {
  ++handled_;
  try {
    on_delivery(msg);
  } catch (const std::exception& ex) {
    log(LogLevel::Error, "delivery hook failed on " + msg.topic + ": " + ex.what());
  }
  // Bindings are independent: each matching one runs once.
  const auto count = bindings_.size();
  for (std::size_t i = 0; i < count && i < bindings_.size(); ++i) {
    if (!bus::topic_matches(bindings_[i].pattern, msg.topic)) continue;
    auto b = bindings_[i];
    try {
      b.handler(msg);
    } catch (const std::exception& ex) {
      log(LogLevel::Error, "handler " + (b.name.empty() ? b.pattern : b.name) + " failed on " +
                               msg.topic + ": " + ex.what());
    }
  }
}

void Agent::fire(HeartbeatBinding& hb, std::int64_t t_ms) {
  ++hb.firings;
  current_time_ = t_ms;
  try {
    hb.action();
  } catch (const std::exception& ex) {
    log(LogLevel::Error, "heartbeat " + (hb.name.empty() ? std::string("action") : hb.name) +
                             " failed: " + ex.what());
  }
  current_time_.reset();
}

std::size_t Agent::drain() {
  std::lock_guard lk(exec_mu_);
  tick_topics_.clear();
  tick_handled_ = 0;
  return drain_pending();
}

std::size_t Agent::drain_pending() {
  std::size_t handled = 0;
  while (true) {
    auto batch = client_->sync();
    if (batch.empty()) return handled;
    for (const auto& msg : batch) {
      ++tick_topics_[msg.topic];
      if (++tick_handled_ > kTickMessageGuard) {
        std::vector<std::pair<std::size_t, std::string>> top;
        for (const auto& [topic, n] : tick_topics_) top.emplace_back(n, topic);
        std::sort(top.rbegin(), top.rend());
        std::string hist;
        for (std::size_t i = 0; i < top.size() && i < 5; ++i) {
          hist += " " + top[i].second + "=" + std::to_string(top[i].first);
        }
        throw Error(Errc::TickOverflow, id() + ":" + hist);
      }
      dispatch(msg);
      ++handled;
    }
  }
}

void Agent::tick(std::int64_t t_ms) {
  std::lock_guard lk(exec_mu_);
  tick_topics_.clear();
  tick_handled_ = 0;
  drain_pending();
  for (auto& hb : heartbeats_) {
    if (t_ms % hb.period_ms == 0) fire(hb, t_ms);
  }
  drain_pending();
}

void Agent::run_realtime(std::stop_token stop, std::optional<std::int64_t> end_ms,
                         std::optional<std::int64_t> start_ms) {
  const auto anchor = clock_->now_ms();
  {
    std::lock_guard lk(exec_mu_);
    for (auto& hb : heartbeats_) {
      if (start_ms) {
        const auto p = hb.period_ms;
        const auto floor = *start_ms / p * p - (*start_ms % p < 0 ? p : 0);
        hb.next_due_ms = floor < *start_ms ? floor + p : floor;
      } else {
        hb.next_due_ms = anchor;
      }
    }
  }
  auto next_due = [&]() -> std::optional<std::int64_t> {
    std::optional<std::int64_t> due;
    for (const auto& hb : heartbeats_) {
      if (end_ms && hb.next_due_ms >= *end_ms) continue;
      if (!due || hb.next_due_ms < *due) due = hb.next_due_ms;
    }
    return due;
  };
  // With `catch_up`, every heartbeat still owed before end_ms fires now.
  auto fire_due = [&](bool catch_up) {
    std::lock_guard lk(exec_mu_);
    for (auto& hb : heartbeats_) {
      while ((catch_up || hb.next_due_ms <= clock_->now_ms()) &&
             (!end_ms || hb.next_due_ms < *end_ms)) {
        fire(hb, hb.next_due_ms);
        hb.next_due_ms += hb.period_ms;
      }
    }
  };

  int reconnect_attempt = 0;
  auto next_reconnect = std::chrono::steady_clock::now();
  while (!stop.stop_requested()) {
    if (!client_->connected()) {
      auto now = std::chrono::steady_clock::now();
      if (now >= next_reconnect) {
        if (client_->try_reconnect()) {
          reconnect_attempt = 0;
        } else {
          next_reconnect = now + RetryPolicy{}.delay(reconnect_attempt++);
        }
      }
    }
    auto wait = std::chrono::milliseconds(50);
    if (auto due = next_due()) {
      auto until = clock_->wall_at(*due) - std::chrono::steady_clock::now();
      wait = std::clamp(std::chrono::duration_cast<std::chrono::milliseconds>(until),
                        std::chrono::milliseconds(0), wait);
    }
    if (auto msg = client_->next(wait)) {
      std::lock_guard lk(exec_mu_);
      dispatch(*msg);
    } else if (!client_->connected()) {
      std::this_thread::sleep_for(wait);
    }
    fire_due(false);
  }
  if (end_ms) fire_due(true);
  if (client_->connected()) {
    try {
      drain();
    } catch (const Error& err) {
      log(LogLevel::Warn, std::string("final drain: ") + err.what());
    }
  }
}

std::uint64_t Agent::heartbeat_firings(std::size_t index) const {
  return index < heartbeats_.size() ? heartbeats_[index].firings : 0;
}

}  // namespace plugsim::agent
