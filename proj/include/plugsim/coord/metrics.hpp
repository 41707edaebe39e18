#pragma once

#include <cstddef>
#include <vector>

namespace plugsim::coord {

inline constexpr double kDefaultDemandWindowS = 900.0;

// Uniformly sampled power; value i holds the mean over [t0 + i*dt, t0 + (i+1)*dt).
struct PowerSeries {
  double t0_s = 0;
  double dt_s = 60;
  std::vector<double> values;

  void validate() const;  // throws InvalidParams
  double duration_s() const noexcept { return dt_s * static_cast<double>(values.size()); }
  double energy_kwh() const noexcept;
};

// Largest mean over consecutive non-overlapping windows aligned at t0; a
// trailing partial window is ignored. Throws SeriesTooShort, InvalidParams.
double rolling_peak(const PowerSeries& series, double window_s);

// rate per kW applied to rolling_peak of a series in W.
double demand_charge(const PowerSeries& series, double window_s, double rate_per_kw);

}  // namespace plugsim::coord
