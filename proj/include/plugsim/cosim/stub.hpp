#pragma once

#include <vector>

#include "plugsim/cosim/protocol.hpp"
#include "plugsim/net/socket.hpp"

namespace plugsim::cosim {

// One-zone thermal test double:
//   T' = T + dt/C * (UA * (T_out - T) - K * max(0, T - setpoint))
struct StubConfig {
  CosimContract contract{"stub-zone", {"zone_T"}, {"cool_setpoint"}, 60.0, {}, {}};
  double capacitance_j_per_k = 5.0e5;
  double ua_w_per_k = 200.0;
  double cooling_gain_w_per_k = 800.0;
  double outdoor_c = 30.0;
  double initial_c = 26.0;
  int steps = 1440;
};

struct StubResult {
  int exit_status = 0;  // 0 clean, 1 fault or protocol error
  int steps_sent = 0;
  int controls_received = 0;
  std::vector<double> times;
  std::vector<double> zone_c;     // temperature reported in each STEP
  std::vector<double> setpoints;  // setpoint received in each CONTROL
  std::string fault;
};

// Closed-form equilibrium with the cooling term active.
double stub_fixed_point(const StubConfig& cfg, double setpoint);

double stub_next_temperature(const StubConfig& cfg, double zone_c, double setpoint);

StubResult run_stub_simulator(const net::Endpoint& gateway, const StubConfig& cfg);

}  // namespace plugsim::cosim
