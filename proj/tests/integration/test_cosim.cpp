#include <doctest.h>

#include <memory>
#include <thread>

#include "../support/oracles.hpp"
#include "../support/test_util.hpp"
#include "plugsim/agent/clock.hpp"
#include "plugsim/bus/broker.hpp"
#include "plugsim/cosim/gateway.hpp"
#include "plugsim/cosim/stub.hpp"
#include "plugsim/net/socket.hpp"
#include "plugsim/sim/runner.hpp"
#include "plugsim/sim/scenario.hpp"

using namespace plugsim;
using namespace std::chrono_literals;
using agent::Json;

namespace {

Json gateway_params(bool lockstep) {
  return {{"port", 0},
          {"sim_id", "stub-zone"},
          {"output_topic_map", {{"zone_T", "sim/zone/temperature"}}},
          {"input_topic_map", {{"control/zone/cool_setpoint", "cool_setpoint"}}},
          {"input_defaults", {{"cool_setpoint", 24.0}}},
          {"timestep_s", 60},
          {"lockstep", lockstep}};
}

Json cosim_scenario() {
  return {{"name", "cosim-zone"},
          {"sim", {{"start_s", 0}, {"end_s", 86400}, {"timestep_s", 60}}},
          {"outputs", {{"historian", false}}},
          {"agents",
           {{{"agent_id", "setpoints"},
             {"interface_kind", "control"},
             {"heartbeat_s", 60},
             {"params",
              {{"measure_patterns", Json::array()},
               {"schedule",
                {{{"t_s", 0}, {"topic", "control/zone/cool_setpoint"}, {"value", 24.0}},
                 {{"t_s", 3600}, {"topic", "control/zone/cool_setpoint"}, {"value", 22.0}}}}}}},
            {{"agent_id", "cosim"}, {"interface_kind", "cosim"}, {"heartbeat_s", 60}, {"params", gateway_params(true)}}}}};
}

}  // namespace

TEST_CASE("lockstep co-simulation follows the independent zone trace") {
  auto cfg = sim::parse_scenario(cosim_scenario());
  cosim::StubResult stub;
  std::jthread stub_thread;
  sim::RunOptions opts;
  opts.on_started = [&](sim::Simulation& s) {
    auto* gw = s.agent_as<cosim::GatewayAgent>("cosim");
    REQUIRE(gw != nullptr);
    net::Endpoint ep{"127.0.0.1", gw->port()};
    stub_thread = std::jthread([&stub, ep] { stub = cosim::run_stub_simulator(ep, cosim::StubConfig{}); });
  };
  sim::Simulation simulation(cfg, opts);
  simulation.run();
  stub_thread.join();

  CHECK(stub.exit_status == 0);
  CHECK(stub.fault.empty());
  REQUIRE(stub.steps_sent == 1440);
  CHECK(stub.controls_received == stub.steps_sent);
  auto* gw = simulation.agent_as<cosim::GatewayAgent>("cosim");
  CHECK(gw->steps() == 1440);
  CHECK(gw->controls() == 1440);
  CHECK_FALSE(gw->fault().has_value());

  CHECK(stub.setpoints[59] == 24.0);
  CHECK(stub.setpoints[60] == 22.0);
  CHECK(stub.times[60] == 3600.0);

  auto golden = testutil::read_json(testutil::golden_path("derived.json"));
  for (const auto& [key, value] : golden.at("zone_trace").items()) {
    const auto k = static_cast<std::size_t>(std::stol(key) / 60);
    INFO("t_s = " << key);
    CHECK(stub.zone_c[k] == doctest::Approx(value.get<double>()).epsilon(1e-12));
  }
  CHECK(std::abs(stub.zone_c.back() - golden.at("zone_fixed_point_22").get<double>()) < 0.1);

  auto expected = oracle::zone_trace(5e5, 200, 800, 30, 26, 60, 1440,
                                     [](double t) { return t < 3600 ? 24.0 : 22.0; });
  REQUIRE(expected.size() >= stub.zone_c.size());
  for (std::size_t k = 0; k < stub.zone_c.size(); ++k) {
    CHECK(stub.zone_c[k] == doctest::Approx(expected[k]).epsilon(1e-12));
  }
}

TEST_CASE("a free-running gateway serves a session at the simulator's pace") {
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<agent::ManualClock>();
  agent::AgentConfig gcfg;
  gcfg.agent_id = "cosim";
  gcfg.bus_endpoint = broker.endpoint();
  gcfg.interface_kind = agent::InterfaceKind::Cosim;
  gcfg.params = gateway_params(false);
  cosim::GatewayAgent gw(gcfg);
  agent::AgentConfig ccfg;
  ccfg.agent_id = "control";
  ccfg.bus_endpoint = broker.endpoint();
  agent::Agent control(ccfg);
  std::vector<double> temps;
  control.bind("sim/zone", [&](const bus::MessageEnvelope& m) { temps.push_back(m.payload.get<double>()); });
  gw.start(clock);
  control.start(clock);
  control.publish("control/zone/cool_setpoint", 22.0);
  control.client()->sync();
  gw.drain();

  cosim::StubConfig sc;
  sc.steps = 100;
  auto result = cosim::run_stub_simulator({"127.0.0.1", gw.port()}, sc);
  CHECK(result.exit_status == 0);
  CHECK(result.steps_sent == 100);
  CHECK(result.controls_received == 100);
  for (double sp : result.setpoints) CHECK(sp == 22.0);
  auto deadline = std::chrono::steady_clock::now() + 5s;
  while (gw.published_outputs() < 100 && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(10ms);
  }
  CHECK(gw.published_outputs() == 100);
  control.drain();
  REQUIRE(temps.size() == 100);
  for (std::size_t k = 0; k < temps.size(); ++k) CHECK(temps[k] == result.zone_c[k]);
  gw.stop();
}

TEST_CASE("a HELLO naming an unmapped output is answered with FAULT") {
  bus::Broker broker(0);
  broker.start();
  agent::AgentConfig gcfg;
  gcfg.agent_id = "cosim";
  gcfg.bus_endpoint = broker.endpoint();
  gcfg.params = gateway_params(false);
  cosim::GatewayAgent gw(gcfg);
  gw.start(std::make_shared<agent::ManualClock>());

  net::LineSocket sock(net::connect_tcp({"127.0.0.1", gw.port()}), 1 << 20);
  cosim::CosimFrame hello;
  hello.kind = cosim::CosimKind::Hello;
  hello.contract = cosim::CosimContract{"stub-zone", {"humidity"}, {"cool_setpoint"}, 60.0, {}, {}};
  sock.write(cosim::encode_cosim(hello));
  auto line = sock.read_line();
  REQUIRE(line.has_value());
  auto reply = cosim::decode_cosim(*line);
  CHECK(reply.kind == cosim::CosimKind::Fault);
  CHECK(reply.reason.find("unknown output") != std::string::npos);
  CHECK_FALSE(sock.read_line().has_value());
  auto deadline = std::chrono::steady_clock::now() + 5s;
  while (!gw.fault() && std::chrono::steady_clock::now() < deadline) std::this_thread::sleep_for(10ms);
  REQUIRE(gw.fault().has_value());
  CHECK(gw.fault()->find("unknown output") != std::string::npos);
  gw.stop();
}

TEST_CASE("a lockstep gateway with no simulator logs the missing session") {
  bus::Broker broker(0);
  broker.start();
  auto params = gateway_params(true);
  params["accept_timeout_s"] = 0.2;
  agent::AgentConfig gcfg;
  gcfg.agent_id = "cosim";
  gcfg.bus_endpoint = broker.endpoint();
  gcfg.heartbeat_s = 60;
  gcfg.params = params;
  cosim::GatewayAgent gw(gcfg);
  gw.start(std::make_shared<agent::ManualClock>());
  gw.tick(0);
  CHECK(gw.steps() == 0);
  CHECK(gw.log().error_count() == 1);
}
