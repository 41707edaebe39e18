#include "plugsim/ingest/agents.hpp"

#include <algorithm>
#include <set>
#include <thread>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"

namespace plugsim::ingest {

using agent::LogLevel;
using Json = nlohmann::json;

void DriverBinding::validate() const {
  std::set<std::string> read_topics;
  for (const auto& [point, topic] : reads) {
    if (!bus::is_valid_topic(topic)) throw Error(Errc::ConfigInvalid, "reads." + point);
    read_topics.insert(topic);
  }
  for (const auto& [topic, point] : writes) {
    if (!bus::is_valid_topic(topic)) throw Error(Errc::ConfigInvalid, "writes." + point);
    if (read_topics.count(topic)) throw Error(Errc::ConfigInvalid, "topic both read and written: " + topic);
  }
}

DriverBinding default_binding(const VirtualDevice& device, std::string_view building,
                              const std::vector<std::string>& reads) {
  DriverBinding b;
  const std::string base = "devices/" + std::string(building) + "/" + device.id() + "/";
  const auto readable = device.readable_points();
  const auto& chosen = reads.empty() ? readable : reads;
  const auto writable = device.writable_points();
  auto is_writable = [&](const std::string& p) {
    return std::find(writable.begin(), writable.end(), p) != writable.end();
  };
  for (const auto& raw : chosen) {
    auto point = normalize_point_name(raw);
    if (std::find(readable.begin(), readable.end(), point) == readable.end()) {
      throw Error(Errc::ConfigInvalid, "reads: unknown point '" + raw + "' for " + device.id());
    }
    // Read-back of a writable flag goes to `<point>_state`; the bare point
    // topic is the write topic.
    b.reads.emplace(point, base + point + (is_writable(point) ? "_state" : ""));
  }
  for (const auto& point : writable) b.writes.emplace(base + point, point);
  b.validate();
  return b;
}

std::vector<PointRecord> driver_poll(VirtualDevice& device, const DriverBinding& binding,
                                     std::int64_t t_ms, double dt_s) {
  device.step(static_cast<double>(t_ms) / 1000.0, dt_s);
  std::vector<PointRecord> out;
  out.reserve(binding.reads.size());
  const auto& readings = device.readings();
  for (const auto& [point, topic] : binding.reads) {
    auto it = readings.find(point);
    if (it == readings.end()) throw Error(Errc::UnknownPoint, device.id() + "/" + point);
    out.push_back({t_ms, topic, it->second, VirtualDevice::unit_of(point)});
  }
  return out;
}

void driver_actuate(VirtualDevice& device, const DriverBinding& binding, const bus::MessageEnvelope& env) {
  auto it = binding.writes.find(env.topic);
  if (it == binding.writes.end()) throw Error(Errc::UnknownPoint, env.topic);
  device.apply(it->second, env.payload);
}

DriverAgent::DriverAgent(agent::AgentConfig cfg, VirtualDevice device, DriverBinding binding)
    : Agent(std::move(cfg)), device_(std::move(device)), binding_(std::move(binding)) {
  binding_.validate();
  every(config().heartbeat_s, [this] { poll(); }, "poll");
  for (const auto& [topic, point] : binding_.writes) {
    bind(topic, [this](const bus::MessageEnvelope& env) { actuate(env); }, "actuate");
  }
}

void DriverAgent::poll() {
  std::vector<PointRecord> records;
  try {
    records = driver_poll(device_, binding_, now_ms(), config().heartbeat_s);
  } catch (const Error& err) {
    log(LogLevel::Error, std::string("poll skipped: ") + err.what());
    return;
  }
  ++polls_;
  for (const auto& rec : records) {
    publish_at(rec.ts_ms, rec.topic, rec.value, {{"unit", rec.unit}});
  }
}

void DriverAgent::actuate(const bus::MessageEnvelope& env) {
  try {
    driver_actuate(device_, binding_, env);
  } catch (const Error& err) {
    log(LogLevel::Warn, std::string("rejected write: ") + err.what());
    publish("agents/" + id() + "/error",
            Json{{"topic", env.topic}, {"error", std::string(to_string(err.code()))}, {"detail", err.detail()}});
  }
}

HistorianAgent::HistorianAgent(agent::AgentConfig cfg) : Agent(std::move(cfg)) {
  const auto& params = config().params;
  path_ = params.value("out", std::string("historian.csv"));
  writer_ = std::make_unique<PointCsvWriter>(path_);
  last_flush_ = std::chrono::steady_clock::now();
  auto patterns = params.value("patterns", Json::array({"devices"}));
  for (const auto& p : patterns) {
    bind(p.get<std::string>(), [this](const bus::MessageEnvelope& msg) { record(msg); }, "record");
  }
}

void HistorianAgent::record(const bus::MessageEnvelope& msg) {
  if (failed_) return;
  if (!msg.payload.is_number()) {
    ++skipped_;
    return;
  }
  try {
    writer_->append(msg.ts_ms, msg.topic, msg.payload.get<double>());
    if (writer_->pending() >= kFlushRows ||
        std::chrono::steady_clock::now() - last_flush_ >= kFlushInterval) {
      flush();
    }
  } catch (const Error& err) {
    failed_ = true;
    log(LogLevel::Error, std::string("historian stopped: ") + err.what());
  }
}

void HistorianAgent::flush() {
  if (!writer_ || failed_) return;
  writer_->flush();
  last_flush_ = std::chrono::steady_clock::now();
}

void HistorianAgent::on_stop() {
  try {
    flush();
  } catch (const Error& err) {
    failed_ = true;
    log(LogLevel::Error, std::string("historian flush failed: ") + err.what());
  }
}

std::string prefixed_topic(std::string_view prefix, std::string_view topic) {
  if (prefix.empty()) return std::string(topic);
  return std::string(prefix) + "/" + std::string(topic);
}

ReplayAgent::ReplayAgent(agent::AgentConfig cfg) : Agent(std::move(cfg)) {
  const auto& params = config().params;
  auto path = params.value("path", std::string());
  if (path.empty()) throw Error(Errc::ConfigInvalid, id() + ".params.path");
  rows_ = read_point_csv(path);
  prefix_ = params.value("topic_prefix", std::string());
  every(config().heartbeat_s, [this] { emit(); }, "replay");
}

ReplayAgent::ReplayAgent(agent::AgentConfig cfg, std::vector<PointRecord> rows, std::string topic_prefix)
    : Agent(std::move(cfg)), rows_(std::move(rows)), prefix_(std::move(topic_prefix)) {
  std::stable_sort(rows_.begin(), rows_.end(),
                   [](const PointRecord& a, const PointRecord& b) { return a.ts_ms < b.ts_ms; });
  every(config().heartbeat_s, [this] { emit(); }, "replay");
}

void ReplayAgent::emit() {
  const auto now = now_ms();
  while (next_ < rows_.size() && rows_[next_].ts_ms <= now) {
    const auto& row = rows_[next_];
    bus::Headers headers;
    if (!row.unit.empty()) headers.emplace("unit", row.unit);
    publish_at(row.ts_ms, prefixed_topic(prefix_, row.topic), row.value, std::move(headers));
    ++next_;
  }
}

std::size_t csv_replay(agent::BusClient& client, const std::vector<PointRecord>& rows, double speedup,
                       std::string_view topic_prefix, std::stop_token stop) {
  if (rows.empty()) return 0;
  if (!(speedup > 0)) throw Error(Errc::ConfigInvalid, "speedup");
  const auto wall0 = std::chrono::steady_clock::now();
  const auto ts0 = rows.front().ts_ms;
  std::size_t sent = 0;
  for (const auto& row : rows) {
    if (stop.stop_requested()) break;
    auto offset = std::chrono::duration<double, std::milli>((row.ts_ms - ts0) / speedup);
    std::this_thread::sleep_until(wall0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(offset));
    bus::Headers headers;
    if (!row.unit.empty()) headers.emplace("unit", row.unit);
    client.publish(bus::make_pub(prefixed_topic(topic_prefix, row.topic), row.value, client.sender(),
                                 row.ts_ms, std::move(headers)));
    ++sent;
  }
  return sent;
}

}  // namespace plugsim::ingest
