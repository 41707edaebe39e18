#include "plugsim/coord/shed.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "plugsim/error.hpp"

namespace plugsim::coord {

void ShedPolicy::validate() const {
  std::set<int> priorities;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const auto& load = loads[i];
    const auto where = "loads[" + std::to_string(i) + "]";
    if (load.device_id.empty() || !ids.insert(load.device_id).second) {
      throw Error(Errc::ConfigInvalid, where + ".device_id");
    }
    if (!priorities.insert(load.priority).second) throw Error(Errc::ConfigInvalid, where + ".priority");
    if (!(load.est_power_w >= 0)) throw Error(Errc::ConfigInvalid, where + ".est_power_w");
  }
  if (!(limit_w > 0)) throw Error(Errc::ConfigInvalid, "limit_w");
  if (!(restore_margin_w >= 0)) throw Error(Errc::ConfigInvalid, "restore_margin_w");
  if (!(restore_hold_s >= 0)) throw Error(Errc::ConfigInvalid, "restore_hold_s");
}

ShedPolicy ShedPolicy::from_json(const nlohmann::json& j) {
  ShedPolicy p;
  try {
    for (const auto& item : j.value("loads", nlohmann::json::array())) {
      ShedLoad load;
      load.device_id = item.at("device_id").get<std::string>();
      load.enable_topic = item.at("enable_topic").get<std::string>();
      load.priority = item.at("priority").get<int>();
      load.sheddable = item.value("sheddable", true);
      load.est_power_w = item.at("est_power_w").get<double>();
      p.loads.push_back(std::move(load));
    }
    p.limit_w = j.value("limit_w", INFINITY);
    p.restore_margin_w = j.value("restore_margin_w", 0.0);
    p.restore_hold_s = j.value("restore_hold_s", 0.0);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::ConfigInvalid, std::string("shed policy: ") + ex.what());
  }
  p.validate();
  return p;
}

namespace {

const ShedLoad* find_load(const ShedPolicy& policy, const std::string& id) {
  for (const auto& load : policy.loads) {
    if (load.device_id == id) return &load;
  }
  return nullptr;
}

}  // namespace

ShedDecision priority_shed(const ShedPolicy& policy, double measured_w, const ShedState& state,
                           double now_s) {
  ShedDecision out;
  out.state = state;
  auto& next = out.state;

  if (measured_w > policy.limit_w) {
    next.restore_since_s.reset();
    std::vector<const ShedLoad*> candidates;
    for (const auto& load : policy.loads) {
      if (load.sheddable && std::find(next.shed.begin(), next.shed.end(), load.device_id) == next.shed.end()) {
        candidates.push_back(&load);
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const ShedLoad* a, const ShedLoad* b) { return a->priority < b->priority; });
    double projected = measured_w;
    for (const auto* load : candidates) {
      if (projected <= policy.limit_w) break;
      projected -= load->est_power_w;
      next.shed.push_back(load->device_id);
      out.commands.push_back({load->device_id, load->enable_topic, 0});
    }
    return out;
  }

  if (next.shed.empty()) {
    next.restore_since_s.reset();
    return out;
  }
  const ShedLoad* last = find_load(policy, next.shed.back());
  if (last == nullptr) {
    next.shed.pop_back();
    next.restore_since_s.reset();
    return out;
  }
  if (measured_w + last->est_power_w <= policy.limit_w - policy.restore_margin_w) {
    if (!next.restore_since_s) next.restore_since_s = now_s;
    if (now_s - *next.restore_since_s >= policy.restore_hold_s) {
      out.commands.push_back({last->device_id, last->enable_topic, 1});
      next.shed.pop_back();
      next.restore_since_s.reset();
    }
  } else {
    next.restore_since_s.reset();
  }
  return out;
}

}  // namespace plugsim::coord
