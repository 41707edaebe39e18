#include "plugsim/models/refrigerator.hpp"

#include <cmath>

#include "plugsim/error.hpp"

namespace plugsim::models {

namespace {

double second_of_day(double t_s) {
  double sod = std::fmod(t_s, kSecondsPerDay);
  return sod < 0 ? sod + kSecondsPerDay : sod;
}

[[noreturn]] void bad(const std::string& why) { throw Error(Errc::InvalidParams, why); }

double number(const nlohmann::json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw Error(Errc::ConfigInvalid, key);
  return it->get<double>();
}

}  // namespace

std::string_view to_string(FridgeMode mode) noexcept {
  switch (mode) {
    case FridgeMode::Normal: return "NORMAL";
    case FridgeMode::Defrost: return "DEFROST";
    case FridgeMode::Recovery: return "RECOVERY";
  }
  return "?";
}

std::string_view to_string(DefrostKind kind) noexcept {
  return kind == DefrostKind::Electric ? "ELECTRIC" : "OFF_CYCLE";
}

bool DefrostSchedule::contains(double t_s) const {
  const double sod = second_of_day(t_s);
  for (const auto& w : windows) {
    // A window running past midnight also covers the start of the day.
    if ((sod >= w.start_s && sod < w.start_s + w.duration_s) ||
        (sod + kSecondsPerDay >= w.start_s && sod + kSecondsPerDay < w.start_s + w.duration_s)) {
      return true;
    }
  }
  return false;
}

void DefrostSchedule::validate() const {
  for (const auto& w : windows) {
    if (!(w.duration_s > 0)) bad("defrost window duration must be positive");
    if (!(w.start_s >= 0 && w.start_s < kSecondsPerDay)) bad("defrost window start outside the day");
    if (w.duration_s >= kSecondsPerDay) bad("defrost window longer than a day");
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t j = i + 1; j < windows.size(); ++j) {
      const auto& a = windows[i];
      const auto& b = windows[j];
      for (double shift : {-kSecondsPerDay, 0.0, kSecondsPerDay}) {
        double bs = b.start_s + shift;
        if (a.start_s < bs + b.duration_s && bs < a.start_s + a.duration_s) {
          bad("defrost windows overlap");
        }
      }
    }
  }
}

double parse_time_of_day(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) throw Error(Errc::ConfigInvalid, "time of day");
  const auto text = j.get<std::string>();
  int h = 0, m = 0, s = 0;
  char tail = 0;
  int n = std::sscanf(text.c_str(), "%d:%d:%d%c", &h, &m, &s, &tail);
  if (n < 2 || n > 3 || h < 0 || h > 23 || m < 0 || m > 59 || s < 0 || s > 59) {
    throw Error(Errc::ConfigInvalid, "time of day '" + text + "'");
  }
  return h * 3600.0 + m * 60.0 + s;
}

DefrostSchedule DefrostSchedule::from_json(const nlohmann::json& j) {
  const nlohmann::json* rows = &j;
  if (j.is_object()) {
    auto it = j.find("windows");
    if (it == j.end()) throw Error(Errc::ConfigInvalid, "defrost_schedule.windows");
    rows = &*it;
  }
  if (!rows->is_array()) throw Error(Errc::ConfigInvalid, "defrost_schedule");
  DefrostSchedule out;
  for (const auto& row : *rows) {
    DefrostWindow w;
    if (row.is_array() && row.size() == 2) {
      w.start_s = parse_time_of_day(row[0]);
      if (!row[1].is_number()) throw Error(Errc::ConfigInvalid, "defrost_schedule.duration_s");
      w.duration_s = row[1].get<double>();
    } else if (row.is_object()) {
      auto start = row.contains("start_s") ? row["start_s"] : row.value("start", nlohmann::json());
      w.start_s = parse_time_of_day(start);
      w.duration_s = number(row, "duration_s", 1800.0);
    } else {
      throw Error(Errc::ConfigInvalid, "defrost_schedule window");
    }
    out.windows.push_back(w);
  }
  out.validate();
  return out;
}

nlohmann::json DefrostSchedule::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& w : windows) arr.push_back({{"start_s", w.start_s}, {"duration_s", w.duration_s}});
  return arr;
}

void RefrigeratorParams::validate() const {
  if (!(t_low_c < t_high_c)) bad("T_low must be below T_high");
  if (!(capacitance_j_per_k > 0) || !(ua_w_per_k > 0)) bad("C and UA must be positive");
  if (cooling_w < 0 || compressor_w < 0 || heater_w < 0 || parasitic_w < 0) bad("powers must be non-negative");
  for (double v : {capacitance_j_per_k, ua_w_per_k, ambient_c, cooling_w, compressor_w, heater_w,
                   parasitic_w, t_low_c, t_high_c}) {
    if (!std::isfinite(v)) bad("parameters must be finite");
  }
}

RefrigeratorParams RefrigeratorParams::from_json(const nlohmann::json& j) {
  RefrigeratorParams p;
  if (j.is_null()) return p;
  p.capacitance_j_per_k = number(j, "C", p.capacitance_j_per_k);
  p.ua_w_per_k = number(j, "UA", p.ua_w_per_k);
  p.ambient_c = number(j, "T_amb", p.ambient_c);
  p.cooling_w = number(j, "Q_cool", p.cooling_w);
  p.compressor_w = number(j, "P_comp", p.compressor_w);
  p.heater_w = number(j, "P_heat", p.heater_w);
  p.parasitic_w = number(j, "P_par", p.parasitic_w);
  p.t_low_c = number(j, "T_low", p.t_low_c);
  p.t_high_c = number(j, "T_high", p.t_high_c);
  if (auto it = j.find("defrost_kind"); it != j.end()) {
    auto kind = it->get<std::string>();
    if (kind == "ELECTRIC" || kind == "electric") {
      p.defrost_kind = DefrostKind::Electric;
    } else if (kind == "OFF_CYCLE" || kind == "off_cycle" || kind == "off-cycle") {
      p.defrost_kind = DefrostKind::OffCycle;
    } else {
      throw Error(Errc::ConfigInvalid, "defrost_kind");
    }
  }
  p.validate();
  return p;
}

RefrigeratorStep step_refrigerator(const RefrigeratorState& s, double t_s, double dt_s,
                                   const DefrostSchedule& schedule) {
  const auto& p = s.params;
  p.validate();
  if (!(dt_s > 0)) bad("dt must be positive");

  RefrigeratorStep out;
  auto& next = out.state;
  next = s;

  if (schedule.contains(t_s)) {
    next.mode = FridgeMode::Defrost;
    next.compressor_on = false;
  } else {
    if (s.mode == FridgeMode::Defrost) next.mode = FridgeMode::Recovery;
    if (next.mode == FridgeMode::Recovery) {
      if (s.cabinet_c <= p.t_low_c) {
        next.mode = FridgeMode::Normal;
        next.compressor_on = false;
      } else {
        next.compressor_on = true;
      }
    } else if (s.cabinet_c >= p.t_high_c) {
      next.compressor_on = true;
    } else if (s.cabinet_c <= p.t_low_c) {
      next.compressor_on = false;
    }
  }

  const bool heating = next.mode == FridgeMode::Defrost && p.defrost_kind == DefrostKind::Electric;
  out.heater_w = heating ? p.heater_w : 0.0;
  const double q_cool = next.compressor_on ? p.cooling_w : 0.0;
  next.cabinet_c = s.cabinet_c + dt_s / p.capacitance_j_per_k *
                                     (p.ua_w_per_k * (p.ambient_c - s.cabinet_c) + out.heater_w - q_cool);
  out.power_w = p.parasitic_w + (next.compressor_on ? p.compressor_w : 0.0) + out.heater_w;
  return out;
}

}  // namespace plugsim::models
