#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "plugsim/models/refrigerator.hpp"

namespace plugsim::coord {

inline constexpr std::uint64_t kExhaustiveGuard = 1000000;

struct PlanUnit {
  std::string unit_id;
  int cycles = 1;
  double duration_s = 1800;
  double min_gap_s = 1800;            // start to start, measured around the day
  std::vector<double> power_template;  // W per second from window start
};

struct DefrostPlanProblem {
  std::vector<PlanUnit> units;
  std::vector<double> background_w;  // one value per slot over 24 h
  double slot_s = 900;

  std::size_t slots() const noexcept { return background_w.size(); }
  void validate() const;  // throws InvalidParams or Infeasible
};

enum class PlanMode { Exhaustive, Greedy };

std::string_view to_string(PlanMode mode) noexcept;
PlanMode parse_plan_mode(std::string_view text);  // throws ConfigInvalid

// unit_id -> ascending start slots
using DefrostPlan = std::map<std::string, std::vector<int>>;

struct PlanResult {
  DefrostPlan schedule;
  double achieved_peak_w = 0;
  std::vector<double> aggregate_w;  // per slot under `schedule`
  std::uint64_t candidates = 0;     // complete assignments evaluated
};

// Mean template power falling in each slot for a cycle starting at slot 0.
std::vector<double> template_slot_profile(const std::vector<double>& power_template, double slot_s,
                                          std::size_t slots);

// Background plus every cycle's slot profile, summed in unit declaration order.
std::vector<double> aggregate_profile(const DefrostPlanProblem& p, const DefrostPlan& plan);
double evaluate_schedule(const DefrostPlanProblem& p, const DefrostPlan& plan);

// True when `starts` has `cycles` distinct ascending slots whose circular
// start-to-start gaps are all at least the unit's min gap.
bool is_feasible(const DefrostPlanProblem& p, const PlanUnit& unit, const std::vector<int>& starts);

// Every feasible start tuple of one unit in lexicographic order.
std::vector<std::vector<int>> unit_candidates(const DefrostPlanProblem& p, const PlanUnit& unit,
                                              std::uint64_t limit = kExhaustiveGuard + 1);

// Throws Infeasible, GuardExceeded (exhaustive beyond kExhaustiveGuard).
PlanResult plan_defrost(const DefrostPlanProblem& p, PlanMode mode);

// W from window start until the unit is back in NORMAL, at 1 s resolution.
std::vector<double> extract_defrost_template(const models::RefrigeratorParams& params,
                                             double duration_s);

// Converts slot starts to daily windows.
models::DefrostSchedule to_defrost_schedule(const std::vector<int>& starts, double slot_s,
                                            double duration_s);

nlohmann::json plan_to_json(const PlanResult& result, const DefrostPlanProblem& p, PlanMode mode);

}  // namespace plugsim::coord
