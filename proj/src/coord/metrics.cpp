#include "plugsim/coord/metrics.hpp"

#include <cmath>
#include <numeric>

#include "plugsim/error.hpp"

namespace plugsim::coord {

void PowerSeries::validate() const {
  if (!(dt_s > 0) || !std::isfinite(dt_s)) throw Error(Errc::InvalidParams, "dt_s must be positive");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidParams, "power series value is not finite");
  }
}

double PowerSeries::energy_kwh() const noexcept {
  return std::accumulate(values.begin(), values.end(), 0.0) * dt_s / 3.6e6;
}

double rolling_peak(const PowerSeries& series, double window_s) {
  series.validate();
  if (!(window_s > 0)) throw Error(Errc::InvalidParams, "window_s must be positive");
  const double ratio = window_s / series.dt_s;
  const auto per_window = static_cast<std::size_t>(std::llround(ratio));
  if (per_window == 0 || std::abs(ratio - static_cast<double>(per_window)) > 1e-9) {
    throw Error(Errc::InvalidParams, "window_s must be a multiple of dt_s");
  }
  if (series.values.size() < per_window) {
    throw Error(Errc::SeriesTooShort, "series covers " + std::to_string(series.duration_s()) +
                                          " s, window is " + std::to_string(window_s) + " s");
  }
  double peak = -INFINITY;
  for (std::size_t start = 0; start + per_window <= series.values.size(); start += per_window) {
    const auto first = series.values.begin() + static_cast<std::ptrdiff_t>(start);
    double mean = std::accumulate(first, first + static_cast<std::ptrdiff_t>(per_window), 0.0) /
                  static_cast<double>(per_window);
    peak = std::max(peak, mean);
  }
  return peak;
}

double demand_charge(const PowerSeries& series, double window_s, double rate_per_kw) {
  return rate_per_kw * rolling_peak(series, window_s) / 1000.0;
}

}  // namespace plugsim::coord
