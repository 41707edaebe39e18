#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace plugsim::models {

inline constexpr double kSecondsPerDay = 86400.0;

enum class FridgeMode { Normal, Defrost, Recovery };
enum class DefrostKind { Electric, OffCycle };

std::string_view to_string(FridgeMode mode) noexcept;
std::string_view to_string(DefrostKind kind) noexcept;

struct DefrostWindow {
  double start_s = 0;     // seconds from midnight
  double duration_s = 0;

  bool operator==(const DefrostWindow&) const = default;
};

// Daily-repeating defrost windows, each half-open [start, start + duration).
struct DefrostSchedule {
  std::vector<DefrostWindow> windows;

  bool contains(double t_s) const;
  void validate() const;  // throws InvalidParams

  // [{"start": "02:12" | seconds, "duration_s": 1800}, ...] or [[start, dur], ...]
  static DefrostSchedule from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

double parse_time_of_day(const nlohmann::json& j);  // "HH:MM[:SS]" or seconds

struct RefrigeratorParams {
  double capacitance_j_per_k = 2.0e5;
  double ua_w_per_k = 50.0;
  double ambient_c = 25.0;
  double cooling_w = 3000.0;        // thermal
  double compressor_w = 1500.0;     // electrical
  double heater_w = 2000.0;
  double parasitic_w = 100.0;
  double t_low_c = 2.0;
  double t_high_c = 4.0;
  DefrostKind defrost_kind = DefrostKind::Electric;

  void validate() const;
  static RefrigeratorParams from_json(const nlohmann::json& j);

  bool operator==(const RefrigeratorParams&) const = default;
};

struct RefrigeratorState {
  double cabinet_c = 3.0;
  bool compressor_on = false;
  FridgeMode mode = FridgeMode::Normal;
  RefrigeratorParams params;

  bool operator==(const RefrigeratorState&) const = default;
};

struct RefrigeratorStep {
  RefrigeratorState state;  // mode/compressor for [t, t+dt), temperature at t+dt
  double power_w = 0;
  double heater_w = 0;
};

// Explicit Euler; dt <= 60 s keeps the default model well inside stability.
RefrigeratorStep step_refrigerator(const RefrigeratorState& s, double t_s, double dt_s,
                                   const DefrostSchedule& schedule);

}  // namespace plugsim::models
