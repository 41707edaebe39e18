#include "plugsim/coord/dr.hpp"

#include <algorithm>
#include <cmath>

#include "plugsim/error.hpp"

namespace plugsim::coord {

using agent::LogLevel;
using Json = nlohmann::json;

std::string_view to_string(Reliability r) noexcept {
  switch (r) {
    case Reliability::Normal: return "NORMAL";
    case Reliability::High: return "HIGH";
    case Reliability::Emergency: return "EMERGENCY";
  }
  return "NORMAL";
}

Reliability parse_reliability(std::string_view text) {
  if (text == "NORMAL") return Reliability::Normal;
  if (text == "HIGH") return Reliability::High;
  if (text == "EMERGENCY") return Reliability::Emergency;
  throw Error(Errc::ConfigInvalid, "reliability: unknown value '" + std::string(text) + "'");
}

void DemandResponseEvent::validate() const {
  if (event_id.empty()) throw Error(Errc::ConfigInvalid, "event_id");
  if (!std::isfinite(start_s)) throw Error(Errc::ConfigInvalid, "start_s");
  if (!(duration_s > 0) || !std::isfinite(duration_s)) throw Error(Errc::ConfigInvalid, "duration_s");
  if (!(price_per_kwh >= 0) || !std::isfinite(price_per_kwh)) throw Error(Errc::ConfigInvalid, "price_per_kwh");
  if (target_limit_w && !(*target_limit_w > 0 && std::isfinite(*target_limit_w))) {
    throw Error(Errc::ConfigInvalid, "target_limit_w");
  }
}

DemandResponseEvent DemandResponseEvent::from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigInvalid, "event must be an object");
  DemandResponseEvent e;
  auto field = [&](const char* name, auto& out) {
    try {
      out = j.at(name).get<std::remove_reference_t<decltype(out)>>();
    } catch (const Json::exception&) {
      throw Error(Errc::ConfigInvalid, name);
    }
  };
  field("event_id", e.event_id);
  field("start_s", e.start_s);
  field("duration_s", e.duration_s);
  if (j.contains("price_per_kwh")) field("price_per_kwh", e.price_per_kwh);
  if (j.contains("reliability")) {
    if (!j["reliability"].is_string()) throw Error(Errc::ConfigInvalid, "reliability");
    e.reliability = parse_reliability(j["reliability"].get<std::string>());
  }
  if (j.contains("target_limit_w") && !j["target_limit_w"].is_null()) {
    double cap = 0;
    field("target_limit_w", cap);
    e.target_limit_w = cap;
  }
  e.validate();
  return e;
}

Json DemandResponseEvent::to_json(std::string_view status) const {
  return {{"event_id", event_id},
          {"status", std::string(status)},
          {"start_s", start_s},
          {"duration_s", duration_s},
          {"price_per_kwh", price_per_kwh},
          {"reliability", std::string(to_string(reliability))},
          {"target_limit_w", target_limit_w ? Json(*target_limit_w) : Json(nullptr)}};
}

void validate_events(std::vector<DemandResponseEvent>& events, std::string_view field) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    try {
      events[i].validate();
    } catch (const Error& err) {
      throw Error(Errc::ConfigInvalid, std::string(field) + "[" + std::to_string(i) + "]." + err.detail());
    }
  }
  std::vector<std::size_t> order(events.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return events[a].start_s < events[b].start_s; });
  for (std::size_t x = 0; x < order.size(); ++x) {
    const auto& a = events[order[x]];
    for (std::size_t y = x + 1; y < order.size(); ++y) {
      const auto& b = events[order[y]];
      if (b.start_s >= a.end_s()) break;
      if (a.event_id == b.event_id) {
        throw Error(Errc::ConfigInvalid, std::string(field) + "[" + std::to_string(order[y]) + "].event_id");
      }
      if (a.target_limit_w && b.target_limit_w && *a.target_limit_w != *b.target_limit_w) {
        throw Error(Errc::ConfigInvalid,
                    std::string(field) + "[" + std::to_string(order[y]) + "].target_limit_w");
      }
    }
  }
  std::vector<DemandResponseEvent> sorted;
  sorted.reserve(events.size());
  for (auto i : order) sorted.push_back(events[i]);
  events = std::move(sorted);
}

DrAgent::DrAgent(agent::AgentConfig cfg) : Agent(std::move(cfg)) {
  const auto& params = config().params;
  if (params.contains("events")) {
    if (!params["events"].is_array()) throw Error(Errc::ConfigInvalid, "events");
    for (std::size_t i = 0; i < params["events"].size(); ++i) {
      try {
        events_.push_back(DemandResponseEvent::from_json(params["events"][i]));
      } catch (const Error& err) {
        throw Error(Errc::ConfigInvalid, "events[" + std::to_string(i) + "]." + err.detail());
      }
    }
  }
  validate_events(events_, "events");
  setup();
}

DrAgent::DrAgent(agent::AgentConfig cfg, std::vector<DemandResponseEvent> events)
    : Agent(std::move(cfg)), events_(std::move(events)) {
  validate_events(events_, "events");
  setup();
}

void DrAgent::setup() {
  const auto& params = config().params;
  default_price_ = params.value("default_price_per_kwh", 0.12);
  price_period_s_ = params.value("price_period_s", kDefaultPricePeriodS);
  if (!(default_price_ >= 0)) throw Error(Errc::ConfigInvalid, "default_price_per_kwh");
  if (!(price_period_s_ > 0)) throw Error(Errc::ConfigInvalid, "price_period_s");
  phase_.assign(events_.size(), Phase::Pending);
  every(config().heartbeat_s, [this] { step(); }, "dr-step");
  every(price_period_s_, [this] { publish_price(); }, "dr-price");
  bind("dr/inject", [this](const bus::MessageEnvelope& msg) { inject(msg); }, "dr-inject");
}

double DrAgent::effective_price() const {
  double price = default_price_;
  bool any = false;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (phase_[i] != Phase::Active) continue;
    price = any ? std::max(price, events_[i].price_per_kwh) : events_[i].price_per_kwh;
    any = true;
  }
  return price;
}

void DrAgent::publish_price() {
  std::lock_guard lk(mu_);
  publish("dr/price", effective_price());
}

void DrAgent::step() {
  const double now_s = static_cast<double>(now_ms()) / 1000.0;
  std::lock_guard lk(mu_);
  bool changed = false;
  auto announce = [&](std::size_t i, std::string_view status) {
    auto payload = events_[i].to_json(status);
    payload["t_s"] = now_s;
    history_.push_back(payload);
    publish("dr/events", std::move(payload));
    changed = true;
  };
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (phase_[i] == Phase::Active && events_[i].end_s() <= now_s) {
      phase_[i] = Phase::Ended;
      announce(i, "ended");
    }
  }
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (phase_[i] != Phase::Pending || events_[i].start_s > now_s) continue;
    phase_[i] = Phase::Active;
    announce(i, "active");
    if (events_[i].end_s() <= now_s) {
      phase_[i] = Phase::Ended;
      announce(i, "ended");
    }
  }
  if (changed) publish("dr/price", effective_price());
}

void DrAgent::inject(const bus::MessageEnvelope& msg) {
  try {
    auto body = msg.payload;
    if (body.is_object() && !body.contains("start_s")) body["start_s"] = static_cast<double>(now_ms()) / 1000.0;
    auto event = DemandResponseEvent::from_json(body);
    std::lock_guard lk(mu_);
    auto candidate = events_;
    candidate.push_back(event);
    validate_events(candidate, "events");
    std::vector<Phase> phases;
    for (const auto& e : candidate) {
      auto it = std::find_if(events_.begin(), events_.end(),
                             [&](const DemandResponseEvent& old) { return old == e; });
      phases.push_back(it == events_.end() ? Phase::Pending : phase_[static_cast<std::size_t>(it - events_.begin())]);
    }
    events_ = std::move(candidate);
    phase_ = std::move(phases);
    log(LogLevel::Info, "scheduled injected event " + event.event_id);
  } catch (const Error& err) {
    log(LogLevel::Error, std::string("rejected injected event: ") + err.what());
    publish("agents/" + id() + "/error", Json{{"topic", msg.topic}, {"error", std::string(to_string(err.code()))},
                                              {"detail", err.detail()}});
  }
}

std::vector<DemandResponseEvent> DrAgent::active() const {
  std::lock_guard lk(mu_);
  std::vector<DemandResponseEvent> out;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (phase_[i] == Phase::Active) out.push_back(events_[i]);
  }
  return out;
}

std::vector<Json> DrAgent::history() const {
  std::lock_guard lk(mu_);
  return history_;
}

}  // namespace plugsim::coord
