#include "plugsim/hmi/bridge.hpp"

#include <algorithm>
#include <cstdlib>

#include "http_server.hpp"
#include "plugsim/bus/topic.hpp"
#include "plugsim/coord/dr.hpp"
#include "plugsim/error.hpp"
#include "plugsim/models/refrigerator.hpp"
#include "plugsim/sim/report.hpp"

namespace plugsim::hmi {

using Json = nlohmann::json;

std::uint16_t default_http_port() {
  if (const char* env = std::getenv("PLUGSIM_HTTP_PORT"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != nullptr && *end == '\0' && v >= 0 && v <= 65535) return static_cast<std::uint16_t>(v);
  }
  return kDefaultHttpPort;
}

std::vector<BridgeDevice> bridge_devices_from_json(const Json& j) {
  std::vector<BridgeDevice> out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw Error(Errc::ConfigInvalid, "devices");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto where = "devices[" + std::to_string(i) + "]";
    try {
      BridgeDevice d;
      d.id = j[i].at("id").get<std::string>();
      d.kind = j[i].value("kind", std::string());
      d.building = j[i].value("building", std::string("home"));
      d.writes = j[i].value("writes", std::vector<std::string>{});
      out.push_back(std::move(d));
    } catch (const Json::exception&) {
      throw Error(Errc::ConfigInvalid, where);
    }
  }
  return out;
}

BridgeState::BridgeState(std::vector<BridgeDevice> devices, std::string mode)
    : devices_(std::move(devices)), mode_(std::move(mode)) {
  for (const auto& d : devices_) writable_.insert(d.writes.begin(), d.writes.end());
}

const BridgeDevice* BridgeState::find(const std::string& id) const {
  for (const auto& d : devices_) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

bool BridgeState::has_device(const std::string& id) const { return find(id) != nullptr; }

bool BridgeState::is_writable(std::string_view topic) const {
  if (bus::topic_matches("dr", topic)) return true;
  return writable_.count(std::string(topic)) > 0;
}

void BridgeState::observe(const bus::MessageEnvelope& msg) {
  auto parts = bus::split_topic(msg.topic);
  std::lock_guard lk(mu_);
  if (parts.size() == 4 && parts[0] == "devices" && msg.payload.is_number()) {
    Latest latest;
    latest.ts_ms = msg.ts_ms;
    latest.topic = msg.topic;
    latest.value = msg.payload.get<double>();
    if (auto u = msg.headers.find("unit"); u != msg.headers.end()) latest.unit = u->second;
    points_[std::string(parts[2])][std::string(parts[3])] = latest;
    if (parts[3] == "power") power_rows_.push_back({msg.ts_ms, msg.topic, latest.value, latest.unit});
    return;
  }
  if (msg.topic == "dr/events" && msg.payload.is_object()) {
    const auto id = msg.payload.value("event_id", std::string());
    if (msg.payload.value("status", std::string()) == "ended") {
      active_dr_.erase(id);
    } else {
      active_dr_[id] = msg.payload;
    }
    dr_log_.push_back(msg.payload);
    return;
  }
  if (msg.topic == "control/shed/state" && msg.payload.is_object() && msg.payload.contains("shed")) {
    shed_set_.clear();
    for (const auto& s : msg.payload["shed"]) {
      if (s.is_string()) shed_set_.push_back(s.get<std::string>());
    }
    return;
  }
  if (msg.topic == "control/shed/events" && msg.payload.is_object()) shed_log_.push_back(msg.payload);
}

Json BridgeState::state_json(double sim_time_s) const {
  std::lock_guard lk(mu_);
  Json devices = Json::array();
  for (const auto& d : devices_) {
    Json points = Json::object();
    if (auto it = points_.find(d.id); it != points_.end()) {
      for (const auto& [point, latest] : it->second) {
        if (d.kind == "refrigerator" && point == "mode") {
          auto code = static_cast<int>(latest.value);
          if (code >= 0 && code <= 2) {
            points[point] = std::string(models::to_string(static_cast<models::FridgeMode>(code)));
            continue;
          }
        }
        points[point] = latest.value;
      }
    }
    devices.push_back(
        {{"id", d.id}, {"kind", d.kind}, {"building", d.building}, {"points", std::move(points)}, {"writable", d.writes}});
  }
  Json active = Json::array();
  for (const auto& [id, event] : active_dr_) active.push_back(event);
  return {{"sim_time_s", sim_time_s},
          {"mode", mode_},
          {"devices", std::move(devices)},
          {"active_dr_events", std::move(active)},
          {"shed_set", shed_set_}};
}

Json BridgeState::device_json(const std::string& id) const {
  std::lock_guard lk(mu_);
  Json records = Json::array();
  if (auto it = points_.find(id); it != points_.end()) {
    for (const auto& [point, latest] : it->second) {
      Json r{{"ts_ms", latest.ts_ms}, {"topic", latest.topic}, {"value", latest.value}};
      if (!latest.unit.empty()) r["unit"] = latest.unit;
      records.push_back(std::move(r));
    }
  }
  return {{"id", id}, {"points", std::move(records)}};
}

Json BridgeState::report_json(double window_s, double rate_per_kw) const {
  std::vector<ingest::PointRecord> rows;
  std::vector<Json> shed, dr;
  {
    std::lock_guard lk(mu_);
    rows = power_rows_;
    shed = shed_log_;
    dr = dr_log_;
  }
  sim::ReportOptions opts;
  opts.window_s = window_s;
  opts.rate_per_kw = rate_per_kw;
  auto report = sim::make_report(rows, opts);
  report.mode = mode_;
  report.shed_events = std::move(shed);
  report.dr_events = std::move(dr);
  return report.to_json();
}

std::vector<std::string> BridgeState::shed_set() const {
  std::lock_guard lk(mu_);
  return shed_set_;
}

BridgeAgent::BridgeAgent(agent::AgentConfig cfg)
    : Agent(std::move(cfg)),
      state_(bridge_devices_from_json(config().params.value("devices", Json())),
             config().params.value("mode", std::string("LOCKSTEP"))) {
  const auto& params = config().params;
  window_s_ = params.value("demand_window_s", window_s_);
  rate_per_kw_ = params.value("demand_rate_per_kw", rate_per_kw_);
  HttpOptions opts;
  opts.bind = params.value("bind", opts.bind);
  opts.port = static_cast<std::uint16_t>(params.value("port", static_cast<int>(default_http_port())));
  opts.cors = params.value("cors", true);
  opts.ping_interval = std::chrono::milliseconds(
      static_cast<std::int64_t>(params.value("ping_interval_s", kPingIntervalS) * 1000.0));
  opts.queue_limit = params.value("queue_limit", kSessionQueueLimit);
  if (opts.queue_limit == 0) throw Error(Errc::ConfigInvalid, "queue_limit");

  for (const char* pattern : {"devices", "dr/events", "control/shed", "clock/tick"}) {
    pattern_uses_[pattern] = 1;
    bind(pattern, [](const bus::MessageEnvelope&) {}, "state");
  }
  server_ = std::make_unique<HttpServer>(*this, opts);
}

BridgeAgent::~BridgeAgent() {
  if (server_) server_->stop();
  server_.reset();
}

std::uint16_t BridgeAgent::port() const noexcept { return server_ ? server_->port() : 0; }

std::size_t BridgeAgent::sessions() const { return server_ ? server_->sessions() : 0; }

std::uint64_t BridgeAgent::dropped_messages() const { return server_ ? server_->dropped() : 0; }

void BridgeAgent::on_stop() {
  if (server_) server_->stop();
}

void BridgeAgent::on_delivery(const bus::MessageEnvelope& msg) {
  state_.observe(msg);
  if (server_) server_->broadcast(msg);
}

void BridgeAgent::retain_pattern(const std::string& pattern) {
  std::lock_guard lk(pattern_mu_);
  if (pattern_uses_[pattern]++ == 0) bind(pattern, [](const bus::MessageEnvelope&) {}, "stream");
}

void BridgeAgent::release_pattern(const std::string& pattern) {
  std::lock_guard lk(pattern_mu_);
  auto it = pattern_uses_.find(pattern);
  if (it == pattern_uses_.end()) return;
  if (--it->second == 0) {
    pattern_uses_.erase(it);
    unbind(pattern);
  }
}

BridgeAgent::Response BridgeAgent::handle(std::string_view method, std::string_view target, std::string_view body) {
  static constexpr std::string_view kDevices = "/api/v1/devices/";
  const bool get = method == "GET";
  const bool post = method == "POST";
  if (target == "/api/v1/state") {
    if (!get) return {405, {{"error", "method not allowed"}}};
    return {200, state_.state_json(static_cast<double>(now_ms()) / 1000.0)};
  }
  if (target.starts_with(kDevices)) {
    if (!get) return {405, {{"error", "method not allowed"}}};
    std::string id(target.substr(kDevices.size()));
    if (!state_.has_device(id)) return {404, {{"error", "unknown device"}, {"id", id}}};
    return {200, state_.device_json(id)};
  }
  if (target == "/api/v1/report") {
    if (!get) return {405, {{"error", "method not allowed"}}};
    try {
      return {200, state_.report_json(window_s_, rate_per_kw_)};
    } catch (const Error& err) {
      return {503, {{"error", std::string(to_string(err.code()))}, {"detail", err.detail()}}};
    }
  }
  if (target == "/api/v1/actions" || target == "/api/v1/dr") {
    if (!post) return {405, {{"error", "method not allowed"}}};
    Json doc = Json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return {400, {{"error", "body must be an object"}}};
    return target == "/api/v1/actions" ? post_action(doc) : post_dr(doc);
  }
  return {404, {{"error", "not found"}}};
}

BridgeAgent::Response BridgeAgent::post_action(const Json& body) {
  if (!body.contains("topic") || !body["topic"].is_string()) return {400, {{"error", "topic required"}}};
  const auto topic = body["topic"].get<std::string>();
  if (!bus::is_valid_topic(topic)) return {400, {{"error", "invalid topic"}, {"topic", topic}}};
  if (!body.contains("value")) return {400, {{"error", "value required"}}};
  Json value = body["value"];
  if (value.is_boolean()) value = value.get<bool>() ? 1 : 0;
  if (!value.is_number() && !value.is_object() && !value.is_string()) {
    return {400, {{"error", "value must be a number, boolean, string or object"}}};
  }
  if (!state_.is_writable(topic)) return {409, {{"error", "read-only topic"}, {"topic", topic}}};
  const auto ts = now_ms();
  try {
    publish_at(ts, topic, std::move(value));
  } catch (const Error& err) {
    return {503, {{"error", std::string(to_string(err.code()))}, {"detail", err.detail()}}};
  }
  return {200, {{"accepted", true}, {"ts_ms", ts}}};
}

BridgeAgent::Response BridgeAgent::post_dr(const Json& body) {
  Json event = body;
  if (!event.contains("start_s")) event["start_s"] = static_cast<double>(now_ms()) / 1000.0;
  try {
    auto parsed = coord::DemandResponseEvent::from_json(event);
    (void)parsed;
  } catch (const Error& err) {
    return {400, {{"error", std::string(to_string(err.code()))}, {"detail", err.detail()}}};
  }
  const auto ts = now_ms();
  try {
    publish_at(ts, "dr/inject", event);
  } catch (const Error& err) {
    return {503, {{"error", std::string(to_string(err.code()))}, {"detail", err.detail()}}};
  }
  return {200, {{"accepted", true}, {"event_id", event["event_id"]}, {"ts_ms", ts}}};
}

}  // namespace plugsim::hmi
