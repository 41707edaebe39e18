#include "plugsim/models/devices.hpp"

#include <algorithm>
#include <cmath>

#include "plugsim/error.hpp"
#include "plugsim/models/refrigerator.hpp"

namespace plugsim::models {

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(Errc::InvalidParams, why); }

double number(const nlohmann::json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw Error(Errc::ConfigInvalid, key);
  return it->get<double>();
}

double second_of_day(double t_s) {
  double sod = std::fmod(t_s, kSecondsPerDay);
  return sod < 0 ? sod + kSecondsPerDay : sod;
}

}  // namespace

double WaterHeaterParams::draw_w(double t_s) const {
  const double sod = second_of_day(t_s);
  double total = 0.0;
  for (const auto& d : draws) {
    if (sod >= d.start_s && sod < d.start_s + d.duration_s) total += d.loss_w;
  }
  return total;
}

void WaterHeaterParams::validate() const {
  if (!(t_low_c < t_high_c)) bad("T_low must be below T_high");
  if (element_w < 0) bad("P_elem must be non-negative");
  if (!(capacitance_j_per_k > 0) || !(ua_w_per_k >= 0)) bad("C must be positive and UA non-negative");
  for (const auto& d : draws) {
    if (!(d.duration_s > 0) || d.loss_w < 0) bad("bad draw entry");
  }
}

WaterHeaterParams WaterHeaterParams::from_json(const nlohmann::json& j) {
  WaterHeaterParams p;
  if (j.is_null()) return p;
  p.capacitance_j_per_k = number(j, "C", p.capacitance_j_per_k);
  p.ua_w_per_k = number(j, "UA", p.ua_w_per_k);
  p.ambient_c = number(j, "T_amb", p.ambient_c);
  p.element_w = number(j, "P_elem", p.element_w);
  p.t_low_c = number(j, "T_low", p.t_low_c);
  p.t_high_c = number(j, "T_high", p.t_high_c);
  if (auto it = j.find("draw_profile"); it != j.end()) {
    for (const auto& row : *it) {
      WaterDraw d;
      if (row.is_array() && row.size() == 3) {
        d.start_s = parse_time_of_day(row[0]);
        d.duration_s = row[1].get<double>();
        d.loss_w = row[2].get<double>();
      } else {
        auto start = row.contains("start_s") ? row["start_s"] : row.value("start", nlohmann::json(0));
        d.start_s = parse_time_of_day(start);
        d.duration_s = number(row, "duration_s", 0.0);
        d.loss_w = number(row, "loss_w", 0.0);
      }
      p.draws.push_back(d);
    }
  }
  p.validate();
  return p;
}

WaterHeaterStep step_water_heater(const WaterHeaterState& s, double t_s, double dt_s) {
  const auto& p = s.params;
  p.validate();
  if (!(dt_s > 0)) bad("dt must be positive");

  WaterHeaterStep out;
  out.state = s;
  auto& next = out.state;
  if (!s.enabled) {
    next.element_on = false;
  } else if (s.tank_c <= p.t_low_c) {
    next.element_on = true;
  } else if (s.tank_c >= p.t_high_c) {
    next.element_on = false;
  }
  out.power_w = next.element_on ? p.element_w : 0.0;
  next.tank_c = s.tank_c + dt_s / p.capacitance_j_per_k *
                               (out.power_w - p.ua_w_per_k * (s.tank_c - p.ambient_c) - p.draw_w(t_s));
  return out;
}

void EvChargerParams::validate() const {
  if (!(capacity_kwh > 0)) bad("capacity_kwh must be positive");
  if (charge_w < 0) bad("P_charge must be non-negative");
  if (!(efficiency > 0 && efficiency <= 1)) bad("efficiency must lie in (0, 1]");
}

EvChargerParams EvChargerParams::from_json(const nlohmann::json& j) {
  EvChargerParams p;
  if (j.is_null()) return p;
  p.capacity_kwh = number(j, "capacity_kwh", p.capacity_kwh);
  p.charge_w = number(j, "P_charge", p.charge_w);
  p.efficiency = number(j, "efficiency", p.efficiency);
  p.validate();
  return p;
}

EvChargerStep step_ev_charger(const EvChargerState& s, double, double dt_s) {
  const auto& p = s.params;
  p.validate();
  if (!(dt_s > 0)) bad("dt must be positive");
  if (s.soc_kwh < 0 || s.soc_kwh > p.capacity_kwh) bad("soc outside [0, capacity]");

  EvChargerStep out;
  out.state = s;
  if (!s.plugged || !s.enabled || s.soc_kwh >= p.capacity_kwh) return out;

  const double gain_kwh = p.efficiency * p.charge_w * dt_s / 3.6e6;
  const double room_kwh = p.capacity_kwh - s.soc_kwh;
  if (gain_kwh <= room_kwh) {
    out.state.soc_kwh = s.soc_kwh + gain_kwh;
    out.power_w = p.charge_w;
  } else {
    // Last partial step: draw only what fills the battery.
    out.state.soc_kwh = p.capacity_kwh;
    out.power_w = p.charge_w * room_kwh / gain_kwh;
  }
  return out;
}

double step_pv(const PvState& s, double t_s, double) {
  const double irradiance = std::clamp(s.irradiance.at(t_s), 0.0, 1.0);
  return irradiance == 0.0 ? 0.0 : -s.capacity_w * irradiance;
}

double step_load(const LoadProfileState& s, double t_s, double) { return s.watts.at(t_s); }

}  // namespace plugsim::models
