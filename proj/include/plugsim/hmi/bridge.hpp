#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "plugsim/agent/agent.hpp"
#include "plugsim/ingest/csv.hpp"

namespace plugsim::hmi {

inline constexpr std::uint16_t kDefaultHttpPort = 8080;
inline constexpr std::size_t kSessionQueueLimit = 1000;
inline constexpr double kPingIntervalS = 15.0;

std::uint16_t default_http_port();  // PLUGSIM_HTTP_PORT or 8080

struct BridgeDevice {
  std::string id;
  std::string kind;
  std::string building = "home";
  std::vector<std::string> writes;  // actuation topics
};

// Everything the REST side reports, rebuilt from bus traffic alone.
class BridgeState {
 public:
  explicit BridgeState(std::vector<BridgeDevice> devices, std::string mode = "LOCKSTEP");

  void observe(const bus::MessageEnvelope& msg);

  // Writable topics are the drivers' write maps plus anything under `dr`.
  bool is_writable(std::string_view topic) const;
  bool has_device(const std::string& id) const;

  nlohmann::json state_json(double sim_time_s) const;
  nlohmann::json device_json(const std::string& id) const;  // latest PointRecords
  nlohmann::json report_json(double window_s, double rate_per_kw) const;  // throws EmptyHistorian
  std::vector<std::string> shed_set() const;

 private:
  struct Latest {
    std::int64_t ts_ms = 0;
    std::string topic;
    double value = 0;
    std::string unit;
  };

  const BridgeDevice* find(const std::string& id) const;

  std::vector<BridgeDevice> devices_;
  std::string mode_;
  std::set<std::string> writable_;
  mutable std::mutex mu_;
  std::map<std::string, std::map<std::string, Latest>> points_;  // device id -> point -> latest
  std::map<std::string, nlohmann::json> active_dr_;
  std::vector<nlohmann::json> dr_log_;
  std::vector<nlohmann::json> shed_log_;
  std::vector<std::string> shed_set_;
  std::vector<ingest::PointRecord> power_rows_;
};

class HttpServer;

// HTTP and WebSocket front end of a running simulation.
//   GET  /api/v1/state | /api/v1/devices/{id} | /api/v1/report
//   POST /api/v1/actions {topic, value} | /api/v1/dr {event}
//   WS   /api/v1/stream  {"op": "subscribe" | "unsubscribe", "patterns": [...]}
class BridgeAgent : public agent::Agent {
 public:
  // params: port, cors, devices [{id, kind, building, writes}], mode,
  // ping_interval_s, queue_limit, demand_window_s, demand_rate_per_kw
  explicit BridgeAgent(agent::AgentConfig cfg);
  ~BridgeAgent() override;

  std::uint16_t port() const noexcept;
  BridgeState& state() noexcept { return state_; }
  std::size_t sessions() const;
  std::uint64_t dropped_messages() const;

  // Adds or releases one use of a bus pattern for the stream.
  void retain_pattern(const std::string& pattern);
  void release_pattern(const std::string& pattern);

  struct Response {
    int status = 200;
    nlohmann::json body;
  };
  // Request routing without the transport; used by the server and tests.
  Response handle(std::string_view method, std::string_view target, std::string_view body);

 protected:
  void on_stop() override;
  void on_delivery(const bus::MessageEnvelope& msg) override;

 private:
  Response post_action(const nlohmann::json& body);
  Response post_dr(const nlohmann::json& body);

  BridgeState state_;
  double window_s_ = 900;
  double rate_per_kw_ = 15;
  std::mutex pattern_mu_;
  std::map<std::string, int> pattern_uses_;
  std::unique_ptr<HttpServer> server_;
};

std::vector<BridgeDevice> bridge_devices_from_json(const nlohmann::json& j);

}  // namespace plugsim::hmi
