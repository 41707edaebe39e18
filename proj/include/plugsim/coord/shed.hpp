#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace plugsim::coord {

struct ShedLoad {
  std::string device_id;
  std::string enable_topic;
  int priority = 0;  // lower sheds first
  bool sheddable = true;
  double est_power_w = 0;
};

struct ShedPolicy {
  std::vector<ShedLoad> loads;
  double limit_w = 0;
  double restore_margin_w = 0;
  double restore_hold_s = 0;

  void validate() const;  // throws ConfigInvalid
  static ShedPolicy from_json(const nlohmann::json& j);
};

struct ShedState {
  std::vector<std::string> shed;          // device ids, in shed order
  std::optional<double> restore_since_s;  // hold timer for shed.back()

  bool operator==(const ShedState&) const = default;
};

struct ShedCommand {
  std::string device_id;
  std::string enable_topic;
  int value = 0;  // 0 disable, 1 enable

  bool operator==(const ShedCommand&) const = default;
};

struct ShedDecision {
  std::vector<ShedCommand> commands;
  ShedState state;
};

// Pure decision step evaluated at sim time `now_s`. Sheds the shortest
// ascending-priority run of still-enabled sheddable loads whose estimates
// bring the projection under the limit; restores at most one load, the most
// recently shed, once its headroom condition has held for restore_hold_s.
ShedDecision priority_shed(const ShedPolicy& policy, double measured_w, const ShedState& state,
                           double now_s = 0);

}  // namespace plugsim::coord
