#pragma once

#include <json.hpp>

#include "plugsim/models/profile.hpp"

namespace plugsim::models {

struct WaterDraw {
  double start_s = 0;     // seconds from midnight, repeats daily
  double duration_s = 0;
  double loss_w = 0;      // heat carried away by the draw
};

struct WaterHeaterParams {
  double capacitance_j_per_k = 190.0 * 4186.0;
  double ua_w_per_k = 3.0;
  double ambient_c = 20.0;
  double element_w = 4500.0;
  double t_low_c = 50.0;
  double t_high_c = 55.0;
  std::vector<WaterDraw> draws;

  double draw_w(double t_s) const;
  void validate() const;
  static WaterHeaterParams from_json(const nlohmann::json& j);
};

struct WaterHeaterState {
  double tank_c = 52.0;
  bool element_on = false;
  bool enabled = true;
  WaterHeaterParams params;
};

struct WaterHeaterStep {
  WaterHeaterState state;
  double power_w = 0;
};

WaterHeaterStep step_water_heater(const WaterHeaterState& s, double t_s, double dt_s);

struct EvChargerParams {
  double capacity_kwh = 60.0;
  double charge_w = 7200.0;
  double efficiency = 0.9;

  void validate() const;
  static EvChargerParams from_json(const nlohmann::json& j);
};

struct EvChargerState {
  bool plugged = false;
  bool enabled = true;
  double soc_kwh = 0.0;
  EvChargerParams params;
};

struct EvChargerStep {
  EvChargerState state;
  double power_w = 0;
};

EvChargerStep step_ev_charger(const EvChargerState& s, double t_s, double dt_s);

struct PvState {
  double capacity_w = 5000.0;
  TimeProfile irradiance;  // values in [0, 1]
};

// Production is negative.
double step_pv(const PvState& s, double t_s, double dt_s);

// Uncontrolled building load following a profile in W.
struct LoadProfileState {
  TimeProfile watts;
};

double step_load(const LoadProfileState& s, double t_s, double dt_s);

}  // namespace plugsim::models
