#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "plugsim/agent/agent.hpp"
#include "plugsim/bus/broker.hpp"
#include "plugsim/sim/report.hpp"
#include "plugsim/sim/scenario.hpp"

namespace plugsim::sim {

class Simulation;

struct RunOptions {
  std::filesystem::path out_dir;  // empty: nothing is written besides the historian temp file
  std::optional<SimMode> mode;
  std::optional<std::uint64_t> seed;
  // Called once every agent is connected, before the first tick.
  std::function<void(Simulation&)> on_started;
  std::stop_token stop;
};

// Builds the agent roster of a scenario in execution order: device drivers,
// then the DR agent (when events or a bridge exist and none is declared),
// then declared agents, then the historian.
std::vector<std::unique_ptr<agent::Agent>> build_agents(const ScenarioConfig& cfg, const net::Endpoint& bus,
                                                        const std::filesystem::path& historian_path);

class Simulation {
 public:
  Simulation(ScenarioConfig cfg, RunOptions opts = {});
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Starts broker and agents, runs to end_s and returns the report.
  // Throws AgentStartupFailure, TickOverflow.
  RunReport run();

  const ScenarioConfig& config() const noexcept { return cfg_; }
  net::Endpoint bus_endpoint() const;
  std::int64_t now_ms() const;
  std::int64_t ticks_done() const noexcept { return ticks_.load(); }
  const std::filesystem::path& historian_path() const noexcept { return historian_path_; }
  agent::Agent* find_agent(std::string_view id);
  template <class T>
  T* agent_as(std::string_view id) {
    return dynamic_cast<T*>(find_agent(id));
  }
  const std::vector<std::unique_ptr<agent::Agent>>& agents() const noexcept { return agents_; }

 private:
  void start_all();
  void stop_all();
  void run_lockstep();
  void run_realtime();
  RunReport finish_report();

  ScenarioConfig cfg_;
  RunOptions opts_;
  SimMode mode_;
  std::filesystem::path historian_path_;
  bool temp_historian_ = false;
  std::unique_ptr<bus::Broker> broker_;
  std::shared_ptr<agent::Clock> clock_;
  std::vector<std::unique_ptr<agent::Agent>> agents_;
  std::atomic<std::int64_t> ticks_{0};
};

RunReport run_lockstep(const ScenarioConfig& cfg, RunOptions opts = {});
RunReport run_realtime(const ScenarioConfig& cfg, RunOptions opts = {});

}  // namespace plugsim::sim
