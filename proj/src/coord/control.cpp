#include "plugsim/coord/control.hpp"

#include <cmath>
#include <limits>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"

namespace plugsim::coord {

using agent::LogLevel;
using Json = nlohmann::json;

namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

bool is_power_topic(std::string_view topic) {
  auto slash = topic.rfind('/');
  return topic.substr(slash == std::string_view::npos ? 0 : slash + 1) == "power";
}

}  // namespace

ShedAgent::ShedAgent(agent::AgentConfig cfg) : Agent(std::move(cfg)) {
  const auto& params = config().params;
  if (params.contains("loads") || params.contains("limit_w")) {
    policy_ = ShedPolicy::from_json(params);
  } else {
    policy_.limit_w = std::numeric_limits<double>::infinity();
  }

  if (params.contains("schedule")) {
    const auto& items = params["schedule"];
    if (!items.is_array()) throw Error(Errc::ConfigInvalid, "schedule");
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto where = "schedule[" + std::to_string(i) + "]";
      TimedSetpoint sp;
      try {
        sp.t_s = items[i].at("t_s").get<double>();
        sp.topic = items[i].at("topic").get<std::string>();
        sp.value = items[i].at("value");
      } catch (const Json::exception&) {
        throw Error(Errc::ConfigInvalid, where);
      }
      if (!bus::is_valid_topic(sp.topic)) throw Error(Errc::ConfigInvalid, where + ".topic");
      schedule_.push_back(std::move(sp));
    }
    std::stable_sort(schedule_.begin(), schedule_.end(),
                     [](const TimedSetpoint& a, const TimedSetpoint& b) { return a.t_s < b.t_s; });
  }

  auto patterns = params.value("measure_patterns", std::vector<std::string>{"devices"});
  for (const auto& pattern : patterns) {
    if (!bus::is_valid_topic(pattern)) throw Error(Errc::ConfigInvalid, "measure_patterns");
    bind(pattern, [this](const bus::MessageEnvelope& msg) { on_power(msg); }, "measure");
  }
  bind("dr/events", [this](const bus::MessageEnvelope& msg) { on_dr(msg); }, "dr");
  every(config().heartbeat_s, [this] {
    play_schedule();
    evaluate();
  }, "control");
}

void ShedAgent::on_power(const bus::MessageEnvelope& msg) {
  if (!is_power_topic(msg.topic) || !msg.payload.is_number()) return;
  std::lock_guard lk(mu_);
  power_by_topic_[msg.topic] = msg.payload.get<double>();
}

void ShedAgent::on_dr(const bus::MessageEnvelope& msg) {
  if (!msg.payload.is_object()) return;
  const auto id = msg.payload.value("event_id", std::string());
  const auto status = msg.payload.value("status", std::string());
  std::lock_guard lk(mu_);
  if (status == "ended") {
    dr_caps_.erase(id);
  } else if (status == "active") {
    const auto& cap = msg.payload.contains("target_limit_w") ? msg.payload["target_limit_w"] : Json();
    if (cap.is_number()) dr_caps_[id] = cap.get<double>();
  }
}

void ShedAgent::play_schedule() {
  const double now_s = static_cast<double>(now_ms()) / 1000.0;
  while (schedule_next_ < schedule_.size() && schedule_[schedule_next_].t_s <= now_s) {
    const auto& sp = schedule_[schedule_next_++];
    publish(sp.topic, sp.value);
  }
}

void ShedAgent::evaluate() {
  const double now_s = static_cast<double>(now_ms()) / 1000.0;
  std::unique_lock lk(mu_);
  if (policy_.loads.empty()) return;
  double measured = 0;
  for (const auto& [topic, w] : power_by_topic_) measured += w;
  ShedPolicy effective = policy_;
  for (const auto& [id, cap] : dr_caps_) effective.limit_w = std::min(effective.limit_w, cap);

  auto decision = priority_shed(effective, measured, state_, now_s);
  const bool changed = decision.state.shed != state_.shed;
  state_ = std::move(decision.state);
  std::vector<Json> notes;
  for (const auto& cmd : decision.commands) {
    Json note{{"t_s", now_s},
              {"device_id", cmd.device_id},
              {"action", cmd.value == 0 ? "shed" : "restore"},
              {"measured_w", measured},
              {"limit_w", finite_or_null(effective.limit_w)}};
    events_.push_back(note);
    notes.push_back(std::move(note));
  }
  Json state{{"shed", state_.shed}, {"measured_w", measured}, {"limit_w", finite_or_null(effective.limit_w)}};
  lk.unlock();

  for (std::size_t i = 0; i < decision.commands.size(); ++i) {
    const auto& cmd = decision.commands[i];
    publish(cmd.enable_topic, cmd.value);
    publish("control/shed/events", notes[i]);
    log(LogLevel::Info, std::string(cmd.value == 0 ? "shed " : "restored ") + cmd.device_id);
  }
  if (changed) publish("control/shed/state", std::move(state));
}

double ShedAgent::measured_w() const {
  std::lock_guard lk(mu_);
  double sum = 0;
  for (const auto& [topic, w] : power_by_topic_) sum += w;
  return sum;
}

double ShedAgent::effective_limit_w() const {
  std::lock_guard lk(mu_);
  double limit = policy_.limit_w;
  for (const auto& [id, cap] : dr_caps_) limit = std::min(limit, cap);
  return limit;
}

std::vector<std::string> ShedAgent::shed_set() const {
  std::lock_guard lk(mu_);
  return state_.shed;
}

std::vector<Json> ShedAgent::events() const {
  std::lock_guard lk(mu_);
  return events_;
}

}  // namespace plugsim::coord
