#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "plugsim/agent/agent.hpp"
#include "plugsim/cosim/protocol.hpp"
#include "plugsim/net/socket.hpp"

namespace plugsim::cosim {

struct GatewayConfig {
  std::string sim_id;  // empty accepts any
  std::map<std::string, std::string> output_topic_map;  // variable -> topic
  std::map<std::string, std::string> input_topic_map;   // topic -> variable
  std::map<std::string, double> input_defaults;         // variable -> value; absent means 0
  std::optional<double> timestep_s;

  void validate() const;  // throws ConfigInvalid
  static GatewayConfig from_json(const nlohmann::json& params);
};

// Protocol state for one external session, independent of sockets and bus.
class GatewaySession {
 public:
  explicit GatewaySession(GatewayConfig cfg) : cfg_(std::move(cfg)) {}

  struct Outcome {
    std::vector<std::pair<std::string, double>> publishes;  // topic, value
    std::optional<CosimFrame> reply;
    bool finished = false;  // END received or FAULT sent
    bool faulted = false;
  };

  // `latest` maps input variable -> most recent bus value.
  Outcome on_frame(const CosimFrame& frame, const std::map<std::string, double>& latest);

  bool established() const noexcept { return contract_.has_value(); }
  const std::optional<CosimContract>& contract() const noexcept { return contract_; }
  std::uint64_t steps() const noexcept { return steps_; }
  std::uint64_t controls() const noexcept { return controls_; }

 private:
  Outcome fault(std::string reason);

  GatewayConfig cfg_;
  std::optional<CosimContract> contract_;
  std::optional<double> last_t_;
  std::uint64_t steps_ = 0;
  std::uint64_t controls_ = 0;
};

// Bridges one external simulator to the bus. In lockstep each heartbeat
// consumes exactly one STEP; otherwise a protocol thread serves sessions as
// fast as the external side drives them.
class GatewayAgent : public agent::Agent {
 public:
  // params: port, bind, sim_id, output_topic_map, input_topic_map,
  // input_defaults, timestep_s, accept_timeout_s, lockstep
  explicit GatewayAgent(agent::AgentConfig cfg);
  ~GatewayAgent() override;

  std::uint16_t port() const noexcept { return port_; }
  std::uint64_t steps() const;
  std::uint64_t controls() const;
  std::uint64_t published_outputs() const noexcept { return published_.load(); }
  bool session_finished() const noexcept { return finished_.load(); }
  std::optional<std::string> fault() const;

 protected:
  void on_start() override;
  void on_stop() override;

 private:
  void lockstep_step();
  bool open_session(std::chrono::milliseconds timeout);
  // Reads one frame and answers it; false once the session is over.
  bool serve_one();
  void serve_loop(std::stop_token stop);
  std::map<std::string, double> latest_snapshot();

  GatewayConfig gw_;
  bool lockstep_ = true;
  std::chrono::milliseconds accept_timeout_{10000};
  net::Fd listener_;
  std::uint16_t port_ = 0;
  net::LineSocket conn_;
  bool connected_ = false;
  std::optional<GatewaySession> session_;
  mutable std::mutex mu_;
  std::map<std::string, double> latest_;
  std::atomic<std::uint64_t> published_{0};
  std::atomic<bool> finished_{false};
  std::optional<std::string> fault_;
  std::jthread protocol_thread_;
};

}  // namespace plugsim::cosim
