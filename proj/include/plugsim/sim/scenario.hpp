#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "plugsim/agent/config.hpp"
#include "plugsim/coord/dr.hpp"
#include "plugsim/coord/planner.hpp"

namespace plugsim::sim {

enum class SimMode { Lockstep, Realtime };

std::string_view to_string(SimMode mode) noexcept;
std::optional<SimMode> parse_sim_mode(std::string_view text) noexcept;

struct SimSettings {
  double start_s = 0;
  double end_s = 86400;
  double timestep_s = 60;
  SimMode mode = SimMode::Lockstep;
  double speedup = 1;

  std::int64_t ticks() const;
};

struct DeviceSpec {
  std::string id;
  std::string kind;
  std::string building = "home";
  double heartbeat_s = 0;  // defaults to the sim timestep
  std::vector<std::string> reads;
  nlohmann::json block;  // VirtualDevice description with paths resolved
};

struct DefrostPlanSpec {
  std::vector<coord::PlanUnit> units;  // templates filled from device params
  std::vector<double> background_w;
  double slot_s = 360;
  coord::PlanMode mode = coord::PlanMode::Exhaustive;
  bool apply = false;  // replace the units' schedules with the plan before running
};

struct OutputSettings {
  std::vector<std::string> historian_patterns{"devices"};
  bool historian = true;
  std::filesystem::path report_path;  // empty: <out>/report.json
  double demand_window_s = 900;
  double demand_rate_per_kw = 15;
};

struct ScenarioConfig {
  std::string name = "scenario";
  SimSettings sim;
  std::uint16_t broker_port = 0;  // 0 picks a free port
  std::vector<DeviceSpec> devices;
  std::vector<agent::AgentConfig> agents;
  std::vector<coord::DemandResponseEvent> dr_events;
  std::optional<DefrostPlanSpec> defrost_plan;
  OutputSettings outputs;
  std::uint64_t seed = 0;
  std::filesystem::path base_dir;
};

// Throws ConfigParse (unreadable or not JSON) or ConfigInvalid with the
// offending field path, e.g. "agents[2].agent_id" or "sim.timestep_s".
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Planner input built from the scenario's defrost_plan block.
coord::DefrostPlanProblem plan_problem(const ScenarioConfig& cfg);

// Writes the plan's windows into the matching refrigerator blocks.
void apply_defrost_plan(ScenarioConfig& cfg, const coord::PlanResult& result);

}  // namespace plugsim::sim
