#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include <json.hpp>

namespace plugsim::models {

// Piecewise-linear time series; zero outside the sampled span. With
// `repeat_daily` the lookup uses the second of day.
struct TimeProfile {
  std::vector<std::pair<double, double>> samples;  // (seconds, value), ascending
  bool repeat_daily = false;

  double at(double t_s) const;
  void validate(double lo, double hi) const;  // throws InvalidParams

  // [[t, v], ...] or {"samples": [[t, v], ...], "repeat_daily": bool}
  static TimeProfile from_json(const nlohmann::json& j);
  // `seconds,value` rows; a non-numeric first row is taken as a header.
  static TimeProfile from_csv(const std::filesystem::path& path);
};

}  // namespace plugsim::models
