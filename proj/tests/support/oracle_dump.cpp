// Prints the frozen reference values kept in tests/golden/derived.json.

#include <cstdio>
#include <iostream>

#include <json.hpp>

#include "oracles.hpp"

namespace {

const std::vector<std::pair<double, double>> kReferenceWindows{{7920, 1800}, {36720, 1800}, {65520, 1800}};
const std::vector<std::pair<double, double>> kShiftedWindows{{15120, 1800}, {76320, 1800}};
const std::vector<std::pair<double, double>> kBackground{
    {0, 20000}, {21600, 20000}, {39600, 35000}, {57600, 20000}, {86400, 20000}};

nlohmann::json peak_case(const std::vector<std::pair<double, double>>& windows) {
  oracle::FridgeParams fp;
  auto fr = oracle::fridge(fp, windows, 60, 1440, 3.0);
  std::vector<double> agg;
  for (int k = 0; k < 1440; ++k) agg.push_back(fr.power[k] + oracle::daily_piecewise(kBackground, k * 60.0));
  double peak = oracle::naive_rolling_peak(agg, 60, 900);
  return {{"rolling_peak_w", peak}, {"demand_charge", 15.0 * peak / 1000.0},
          {"fridge_kwh", oracle::energy_kwh(fr.power, 60)}};
}

}  // namespace

int main() {
  nlohmann::json out;
  oracle::FridgeParams fp;
  out["fridge_daily_kwh_electric"] = oracle::energy_kwh(oracle::fridge(fp, kReferenceWindows, 60, 1440, 3.0).power, 60);
  fp.electric = false;
  out["fridge_daily_kwh_off_cycle"] = oracle::energy_kwh(oracle::fridge(fp, kReferenceWindows, 60, 1440, 3.0).power, 60);

  auto [steps, drawn] = oracle::ev_fill(10, 7200, 0.9, 60);
  out["ev_fill_steps"] = steps;
  out["ev_fill_kwh"] = drawn;

  out["zone_fixed_point_22"] = oracle::zone_fixed_point(200, 800, 30, 22);
  out["zone_fixed_point_24"] = oracle::zone_fixed_point(200, 800, 30, 24);
  auto trace = oracle::zone_trace(5e5, 200, 800, 30, 26, 60, 1440, [](double t) { return t < 3600 ? 24.0 : 22.0; });
  nlohmann::json kink;
  for (int k : {58, 59, 60, 61, 62, 1439}) kink[std::to_string(k * 60)] = trace[k];
  out["zone_trace"] = kink;

  out["peak_baseline"] = peak_case(kReferenceWindows);
  out["peak_shifted"] = peak_case(kShiftedWindows);
  std::cout << out.dump(2) << "\n";
}
