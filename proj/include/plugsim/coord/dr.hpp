#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "plugsim/agent/agent.hpp"

namespace plugsim::coord {

enum class Reliability { Normal, High, Emergency };

std::string_view to_string(Reliability r) noexcept;
Reliability parse_reliability(std::string_view text);  // throws ConfigInvalid

struct DemandResponseEvent {
  std::string event_id;
  double start_s = 0;
  double duration_s = 0;
  double price_per_kwh = 0;
  Reliability reliability = Reliability::Normal;
  std::optional<double> target_limit_w;

  double end_s() const noexcept { return start_s + duration_s; }
  void validate() const;  // throws ConfigInvalid
  static DemandResponseEvent from_json(const nlohmann::json& j);
  // Payload of `dr/events`; status is "active" or "ended".
  nlohmann::json to_json(std::string_view status) const;

  bool operator==(const DemandResponseEvent&) const = default;
};

// Sorts by start and rejects overlapping events whose caps disagree.
// Errors name the offending field, e.g. "dr_events[1].target_limit_w".
void validate_events(std::vector<DemandResponseEvent>& events, std::string_view field = "dr_events");

inline constexpr double kDefaultPricePeriodS = 300.0;

// Announces events on `dr/events` and prices on `dr/price`. Events start on
// the first heartbeat at or after start_s and end on the first at or after
// their end; the effective price goes out every price period. Events posted
// to `dr/inject` join the schedule.
class DrAgent : public agent::Agent {
 public:
  // params: {"events": [...], "default_price_per_kwh": 0.12, "price_period_s": 300}
  explicit DrAgent(agent::AgentConfig cfg);
  DrAgent(agent::AgentConfig cfg, std::vector<DemandResponseEvent> events);

  const std::vector<DemandResponseEvent>& events() const noexcept { return events_; }
  std::vector<DemandResponseEvent> active() const;
  std::vector<nlohmann::json> history() const;

 private:
  enum class Phase { Pending, Active, Ended };

  void setup();
  void step();
  void publish_price();
  void inject(const bus::MessageEnvelope& msg);
  double effective_price() const;

  std::vector<DemandResponseEvent> events_;
  std::vector<Phase> phase_;
  double default_price_ = 0.12;
  double price_period_s_ = kDefaultPricePeriodS;
  mutable std::mutex mu_;
  std::vector<nlohmann::json> history_;
};

}  // namespace plugsim::coord
