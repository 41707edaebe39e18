#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "plugsim/agent/agent.hpp"
#include "plugsim/coord/shed.hpp"

namespace plugsim::coord {

struct TimedSetpoint {
  double t_s = 0;
  std::string topic;
  nlohmann::json value;
};

// Keeps the summed `<...>/power` readings under the tighter of its own limit
// and the cap of any active DR event, and plays a timed setpoint schedule.
// Publishes enable commands, `control/shed/events` and `control/shed/state`.
class ShedAgent : public agent::Agent {
 public:
  // params: ShedPolicy fields plus "measure_patterns" (default ["devices"])
  // and "schedule": [{"t_s", "topic", "value"}]
  explicit ShedAgent(agent::AgentConfig cfg);

  double measured_w() const;
  double effective_limit_w() const;
  std::vector<std::string> shed_set() const;
  std::vector<nlohmann::json> events() const;
  const ShedPolicy& policy() const noexcept { return policy_; }

 private:
  void on_power(const bus::MessageEnvelope& msg);
  void on_dr(const bus::MessageEnvelope& msg);
  void evaluate();
  void play_schedule();

  ShedPolicy policy_;
  std::vector<TimedSetpoint> schedule_;
  std::size_t schedule_next_ = 0;
  mutable std::mutex mu_;
  std::map<std::string, double> power_by_topic_;
  std::map<std::string, double> dr_caps_;  // event_id -> cap
  ShedState state_;
  std::vector<nlohmann::json> events_;
};

}  // namespace plugsim::coord
