#include "plugsim/cosim/stub.hpp"

#include <algorithm>
#include <thread>

#include "plugsim/error.hpp"

namespace plugsim::cosim {

double stub_fixed_point(const StubConfig& cfg, double setpoint) {
  const double ua = cfg.ua_w_per_k;
  const double k = cfg.cooling_gain_w_per_k;
  return (ua * cfg.outdoor_c + k * setpoint) / (ua + k);
}

double stub_next_temperature(const StubConfig& cfg, double zone_c, double setpoint) {
  const double dt = cfg.contract.timestep_s;
  const double flow = cfg.ua_w_per_k * (cfg.outdoor_c - zone_c) -
                      cfg.cooling_gain_w_per_k * std::max(0.0, zone_c - setpoint);
  return zone_c + dt / cfg.capacitance_j_per_k * flow;
}

StubResult run_stub_simulator(const net::Endpoint& gateway, const StubConfig& cfg) {
  StubResult result;
  auto fail = [&](std::string why) {
    result.exit_status = 1;
    result.fault = std::move(why);
    return result;
  };

  net::Fd fd;
  for (int attempt = 0; attempt < 50 && !fd; ++attempt) {
    fd = net::connect_tcp(gateway);
    if (!fd) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  if (!fd) return fail("gateway unreachable at " + gateway.str());
  net::LineSocket sock(std::move(fd), 1u << 20);

  auto expect = [&](CosimKind kind) -> std::optional<CosimFrame> {
    auto line = sock.read_line();
    if (!line) return std::nullopt;
    auto frame = decode_cosim(*line);
    if (frame.kind != kind) {
      result.fault = frame.kind == CosimKind::Fault ? frame.reason : "unexpected " + std::string(to_string(frame.kind));
      return std::nullopt;
    }
    return frame;
  };

  try {
    CosimFrame hello;
    hello.kind = CosimKind::Hello;
    hello.contract = cfg.contract;
    sock.write(encode_cosim(hello));
    if (!expect(CosimKind::HelloAck)) return fail(result.fault.empty() ? "no HELLO_ACK" : result.fault);

    const auto& out_name = cfg.contract.outputs.front();
    const auto& in_name = cfg.contract.inputs.front();
    double zone = cfg.initial_c;
    for (int k = 0; k < cfg.steps; ++k) {
      CosimFrame step;
      step.kind = CosimKind::Step;
      step.t = k * cfg.contract.timestep_s;
      step.values[out_name] = zone;
      if (!sock.write(encode_cosim(step))) return fail("gateway closed");
      ++result.steps_sent;
      result.times.push_back(step.t);
      result.zone_c.push_back(zone);

      auto control = expect(CosimKind::Control);
      if (!control) return fail(result.fault.empty() ? "no CONTROL" : result.fault);
      ++result.controls_received;
      double setpoint = control->values.at(in_name);
      result.setpoints.push_back(setpoint);
      zone = stub_next_temperature(cfg, zone, setpoint);
    }
    CosimFrame end;
    end.kind = CosimKind::End;
    sock.write(encode_cosim(end));
  } catch (const std::exception& ex) {
    return fail(ex.what());
  }
  return result;
}

}  // namespace plugsim::cosim
