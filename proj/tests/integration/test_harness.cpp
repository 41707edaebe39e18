#include <doctest.h>

#include <chrono>
#include <map>

#include "../support/test_util.hpp"
#include "plugsim/error.hpp"
#include "plugsim/ingest/csv.hpp"
#include "plugsim/net/socket.hpp"
#include "plugsim/sim/report.hpp"
#include "plugsim/sim/runner.hpp"
#include "plugsim/sim/scenario.hpp"

using namespace plugsim;
using agent::Json;

namespace {

sim::RunReport run_scenario(const std::string& name, const std::filesystem::path& out = {}) {
  sim::RunOptions opts;
  opts.out_dir = out;
  return sim::run_lockstep(sim::load_scenario(testutil::scenario_path(name)), opts);
}

Json dr_scenario() {
  return Json::parse(R"({
    "name": "dr-emergency",
    "sim": {"start_s": 0, "end_s": 7200, "timestep_s": 60},
    "devices": [
      {"kind": "load", "id": "base", "params": {"profile": [[0, 5000], [86400, 5000]]}},
      {"kind": "ev_charger", "id": "ev1", "initial": {"plugged": true, "soc_kwh": 0}}
    ],
    "agents": [
      {"agent_id": "shed", "interface_kind": "control", "heartbeat_s": 60,
       "params": {"loads": [{"device_id": "ev1", "enable_topic": "devices/home/ev1/enabled",
                             "priority": 1, "est_power_w": 7200}]}}
    ],
    "dr_events": [
      {"event_id": "e1", "start_s": 3600, "duration_s": 1800, "price_per_kwh": 0.5,
       "reliability": "EMERGENCY", "target_limit_w": 8000}
    ]
  })");
}

}  // namespace

TEST_CASE("two lockstep runs with the same seed produce identical files") {
  testutil::TempDir a, b;
  run_scenario("peak_shifted", a.path() / "run");
  run_scenario("peak_shifted", b.path() / "run");
  for (const char* name : {"historian.csv", "report.json", "aggregate.csv", "power_fridge1.csv"}) {
    INFO(name);
    auto left = testutil::read_file(a.path() / "run" / name);
    CHECK_FALSE(left.empty());
    CHECK(left == testutil::read_file(b.path() / "run" / name));
  }
}

TEST_CASE("peak scenarios match the frozen reference figures") {
  auto golden = testutil::read_json(testutil::golden_path("derived.json"));
  for (const auto& [scenario, key] : std::map<std::string, std::string>{{"peak_baseline", "peak_baseline"},
                                                                       {"peak_shifted", "peak_shifted"}}) {
    INFO(scenario);
    auto report = run_scenario(scenario);
    const auto& g = golden.at(key);
    REQUIRE(report.rolling_peak_w.has_value());
    REQUIRE(report.demand_charge.has_value());
    CHECK(*report.rolling_peak_w == doctest::Approx(g.at("rolling_peak_w").get<double>()).epsilon(1e-9));
    CHECK(*report.demand_charge == doctest::Approx(g.at("demand_charge").get<double>()).epsilon(1e-9));
    REQUIRE(report.device("fridge1") != nullptr);
    CHECK(report.device("fridge1")->energy_kwh == doctest::Approx(g.at("fridge_kwh").get<double>()).epsilon(1e-9));
  }
}

TEST_CASE("the planned schedule does no worse than the baseline") {
  auto baseline = run_scenario("peak_baseline");
  auto planned = run_scenario("peak_planned");
  REQUIRE(planned.rolling_peak_w.has_value());
  CHECK(*planned.rolling_peak_w <= *baseline.rolling_peak_w + 1e-9);
  CHECK(*planned.demand_charge <= *baseline.demand_charge + 1e-9);
  auto cmp = sim::compare_reports(baseline, planned);
  CHECK(cmp.is_object());
}

TEST_CASE("defrost scenarios: the electric variant uses more energy than the off-cycle one") {
  auto electric = run_scenario("defrost_electric");
  auto off_cycle = run_scenario("defrost_offcycle");
  auto golden = testutil::read_json(testutil::golden_path("derived.json"));
  CHECK(electric.device("fridge1")->energy_kwh ==
        doctest::Approx(golden.at("fridge_daily_kwh_electric").get<double>()).epsilon(1e-9));
  CHECK(off_cycle.device("fridge1")->energy_kwh ==
        doctest::Approx(golden.at("fridge_daily_kwh_off_cycle").get<double>()).epsilon(1e-9));
  CHECK(electric.device("fridge1")->energy_kwh > off_cycle.device("fridge1")->energy_kwh);
}

TEST_CASE("a real-time day at speedup 3600 takes about 24 s and matches lockstep energy") {
  auto cfg = sim::load_scenario(testutil::scenario_path("defrost_electric"));
  cfg.sim.speedup = 3600;
  auto lockstep = sim::run_lockstep(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  auto realtime = sim::run_realtime(cfg);
  const double wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(wall_s == doctest::Approx(24.0).epsilon(0.2));
  CHECK(realtime.mode == "REALTIME");
  REQUIRE(realtime.device("fridge1") != nullptr);
  const double e_rt = realtime.device("fridge1")->energy_kwh;
  const double e_ls = lockstep.device("fridge1")->energy_kwh;
  CHECK(std::abs(e_rt - e_ls) <= 0.01 * e_ls);
}

TEST_CASE("an emergency DR cap sheds within the tick it starts and restores when it ends") {
  testutil::TempDir dir;
  auto cfg = sim::parse_scenario(dr_scenario());
  sim::RunOptions opts;
  opts.out_dir = dir.path();
  auto report = sim::run_lockstep(cfg, opts);

  REQUIRE(report.dr_events.size() == 2);
  CHECK(report.dr_events[0]["status"] == "active");
  CHECK(report.dr_events[0]["t_s"] == 3600.0);
  CHECK(report.dr_events[1]["status"] == "ended");
  CHECK(report.dr_events[1]["t_s"] == 5400.0);

  REQUIRE(report.shed_events.size() == 2);
  CHECK(report.shed_events[0]["action"] == "shed");
  CHECK(report.shed_events[0]["device_id"] == "ev1");
  CHECK(report.shed_events[0]["t_s"] == 3600.0);
  CHECK(report.shed_events[0]["limit_w"] == 8000.0);
  CHECK(report.shed_events[1]["action"] == "restore");
  CHECK(report.shed_events[1]["t_s"] == 5400.0);

  std::map<std::int64_t, double> ev_power;
  for (const auto& r : ingest::read_point_csv(dir.path() / "historian.csv")) {
    if (r.topic == "devices/home/ev1/power") ev_power[r.ts_ms] = r.value;
  }
  CHECK(ev_power.at(3540000) == 7200.0);
  CHECK(ev_power.at(3660000) == 0.0);
  CHECK(ev_power.at(5340000) == 0.0);
  CHECK(ev_power.at(5460000) == 7200.0);
}

TEST_CASE("an agent that cannot bind its port fails startup") {
  auto occupied = net::listen_tcp("127.0.0.1", 0);
  const auto port = net::local_port(occupied);
  auto doc = Json::parse(R"({
    "name": "port-clash",
    "sim": {"start_s": 0, "end_s": 600, "timestep_s": 60},
    "outputs": {"historian": false},
    "agents": [{"agent_id": "cosim", "interface_kind": "cosim",
                "params": {"output_topic_map": {"zone_T": "sim/zone/temperature"}}}]
  })");
  doc["agents"][0]["params"]["port"] = port;
  auto cfg = sim::parse_scenario(doc);
  try {
    sim::run_lockstep(cfg);
    FAIL("expected AgentStartupFailure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AgentStartupFailure);
    CHECK(e.detail().find("cosim") != std::string::npos);
  }
}
