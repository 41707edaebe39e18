#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "plugsim/agent/clock.hpp"
#include "plugsim/bus/broker.hpp"
#include "plugsim/coord/planner.hpp"
#include "plugsim/cosim/stub.hpp"
#include "plugsim/error.hpp"
#include "plugsim/ingest/agents.hpp"
#include "plugsim/ingest/csv.hpp"
#include "plugsim/sim/report.hpp"
#include "plugsim/sim/runner.hpp"
#include "plugsim/sim/scenario.hpp"

namespace {

using namespace plugsim;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void install_signals() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

void wait_for_signal() {
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

bool is_config_error(Errc code) {
  switch (code) {
    case Errc::ConfigParse:
    case Errc::ConfigInvalid:
    case Errc::InvalidParams:
    case Errc::InvalidTopic:
    case Errc::CsvParse:
    case Errc::NonFiniteValue:
    case Errc::Infeasible:
    case Errc::GuardExceeded:
      return true;
    default:
      return false;
  }
}

int cmd_run(const std::string& path, const std::string& out, const std::string& mode, std::optional<std::uint64_t> seed) {
  auto cfg = sim::load_scenario(path);
  sim::RunOptions opts;
  opts.out_dir = out;
  opts.seed = seed;
  if (!mode.empty()) {
    auto m = sim::parse_sim_mode(mode);
    if (!m) throw Error(Errc::ConfigInvalid, "--mode: expected lockstep or realtime");
    opts.mode = *m;
  }
  if (cfg.defrost_plan && cfg.defrost_plan->apply) {
    auto plan = coord::plan_defrost(sim::plan_problem(cfg), cfg.defrost_plan->mode);
    sim::apply_defrost_plan(cfg, plan);
    std::cerr << "applied defrost plan, peak " << ingest::format_double(plan.achieved_peak_w) << " W\n";
  }
  sim::Simulation simulation(cfg, opts);
  auto report = simulation.run();
  std::cout << report.to_text();
  if (!out.empty()) std::cout << "artifacts in " << out << "\n";
  return kExitOk;
}

int cmd_broker(std::optional<int> port) {
  install_signals();
  bus::Broker broker(static_cast<std::uint16_t>(port.value_or(agent::default_bus_port())));
  broker.start();
  std::cout << "broker listening on " << broker.endpoint().str() << std::endl;
  wait_for_signal();
  broker.stop();
  auto stats = broker.stats();
  std::cout << "publishes " << stats.publishes << ", deliveries " << stats.deliveries << "\n";
  return kExitOk;
}

int cmd_replay(const std::string& csv, double speedup, const std::string& bus, const std::string& prefix) {
  install_signals();
  auto rows = ingest::read_point_csv(csv);
  agent::BusClient client("replay", net::parse_endpoint(bus, agent::default_bus_port()));
  client.connect();
  std::stop_source stop;
  std::jthread watcher([&stop](std::stop_token st) {
    while (!st.stop_requested()) {
      if (g_interrupted) stop.request_stop();
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  });
  auto sent = ingest::csv_replay(client, rows, speedup, prefix, stop.get_token());
  client.sync();
  client.close();
  std::cout << "replayed " << sent << " of " << rows.size() << " rows\n";
  return kExitOk;
}

int cmd_plan(const std::string& path, const std::string& mode, const std::string& csv_path) {
  auto cfg = sim::load_scenario(path);
  auto problem = sim::plan_problem(cfg);
  auto plan_mode = mode.empty() ? cfg.defrost_plan->mode : coord::parse_plan_mode(mode);
  auto result = coord::plan_defrost(problem, plan_mode);
  std::cout << coord::plan_to_json(result, problem, plan_mode).dump(2) << std::endl;
  std::ofstream csv(csv_path);
  if (!csv) throw Error(Errc::IoError, "cannot write " + csv_path);
  csv << "t_s,power_w\n";
  for (std::size_t k = 0; k < result.aggregate_w.size(); ++k) {
    csv << ingest::format_double(static_cast<double>(k) * problem.slot_s) << ','
        << ingest::format_double(result.aggregate_w[k]) << '\n';
  }
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out, double window_s, double rate) {
  sim::ReportOptions ro;
  ro.window_s = window_s;
  ro.rate_per_kw = rate;
  std::vector<sim::RunReport> reports;
  for (const auto& f : files) {
    auto report = sim::make_report(ingest::read_point_csv(f), ro);
    report.scenario = f;
    reports.push_back(std::move(report));
  }
  for (const auto& r : reports) std::cout << r.to_text() << "\n";
  if (reports.size() == 2) {
    auto comparison = sim::compare_reports(reports[0], reports[1]);
    std::cout << sim::comparison_text(comparison);
    if (!out.empty()) {
      std::filesystem::create_directories(out);
      std::ofstream(std::filesystem::path(out) / "comparison.json") << comparison.dump(2) << "\n";
    }
  }
  if (!out.empty()) {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      auto dir = reports.size() == 1 ? std::filesystem::path(out) : std::filesystem::path(out) / ("run" + std::to_string(i + 1));
      sim::write_report_artifacts(reports[i], dir);
    }
  }
  return kExitOk;
}

int cmd_stub(const std::string& gateway, int steps) {
  cosim::StubConfig cfg;
  cfg.steps = steps;
  auto result = cosim::run_stub_simulator(net::parse_endpoint(gateway, cosim::default_cosim_port()), cfg);
  std::cout << "steps " << result.steps_sent << ", controls " << result.controls_received;
  if (!result.zone_c.empty()) std::cout << ", final zone " << ingest::format_double(result.zone_c.back()) << " C";
  std::cout << "\n";
  if (result.exit_status != 0) {
    std::cerr << "stub simulator: " << result.fault << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_agent(const std::string& path) {
  install_signals();
  auto cfg = agent::load_agent_config_file(path);
  sim::ScenarioConfig scenario;
  scenario.outputs.historian = false;
  scenario.agents.push_back(cfg);
  scenario.sim.timestep_s = cfg.heartbeat_s;
  auto agents = sim::build_agents(scenario, cfg.bus_endpoint, "historian.csv");
  auto& a = *agents.front();
  a.start(std::make_shared<agent::WallClock>());
  std::cout << a.id() << " connected to " << cfg.bus_endpoint.str() << std::endl;
  std::jthread loop([&a](std::stop_token st) { a.run_realtime(st); });
  wait_for_signal();
  loop.request_stop();
  loop.join();
  a.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plugsim: multi-agent prosumer grid simulator"};
  app.require_subcommand(1);

  std::string scenario, out, mode, csv, bus = "127.0.0.1", prefix, gateway = "127.0.0.1", plan_csv = "plan_profile.csv";
  std::optional<std::uint64_t> seed;
  std::optional<int> port;
  double speedup = 1.0, window_s = 900.0, rate = 15.0;
  int steps = 1440;
  std::vector<std::string> historians;

  auto* run = app.add_subcommand("run", "run a scenario");
  run->add_option("scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory");
  run->add_option("--mode", mode, "lockstep or realtime");
  run->add_option("--seed", seed, "override the scenario seed");

  auto* broker = app.add_subcommand("broker", "run a standalone message broker");
  broker->add_option("--port", port, "listen port (PLUGSIM_BUS_PORT or 22916)");

  auto* replay = app.add_subcommand("replay", "publish a point CSV onto the bus");
  replay->add_option("csv", csv, "ts_ms,topic,value file")->required()->check(CLI::ExistingFile);
  replay->add_option("--speedup", speedup, "time compression factor")->check(CLI::PositiveNumber);
  replay->add_option("--bus", bus, "broker host:port");
  replay->add_option("--prefix", prefix, "topic prefix");

  auto* plan = app.add_subcommand("plan-defrost", "optimize defrost start times");
  plan->add_option("scenario", scenario, "scenario with a defrost_plan block")->required()->check(CLI::ExistingFile);
  plan->add_option("--mode", mode, "exhaustive or greedy");
  plan->add_option("--csv", plan_csv, "planned aggregate profile output");

  auto* report = app.add_subcommand("report", "summarize one historian file or compare two");
  report->add_option("historian", historians, "historian CSV files")->required()->expected(1, 2);
  report->add_option("--out", out, "artifact directory");
  report->add_option("--window", window_s, "demand window seconds")->check(CLI::PositiveNumber);
  report->add_option("--rate", rate, "demand rate per kW");

  auto* stub = app.add_subcommand("stub-sim", "drive a co-simulation gateway with the thermal stub");
  stub->add_option("--gateway", gateway, "gateway host:port (PLUGSIM_COSIM_PORT or 9923)");
  stub->add_option("--steps", steps, "number of steps")->check(CLI::PositiveNumber);

  auto* single = app.add_subcommand("agent", "run one agent from its configuration file");
  single->add_option("config", csv, "agent configuration")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(scenario, out, mode, seed);
    if (*broker) return cmd_broker(port);
    if (*replay) return cmd_replay(csv, speedup, bus, prefix);
    if (*plan) return cmd_plan(scenario, mode, plan_csv);
    if (*report) return cmd_report(historians, out, window_s, rate);
    if (*stub) return cmd_stub(gateway, steps);
    if (*single) return cmd_agent(csv);
  } catch (const Error& err) {
    std::cerr << "plugsim: " << err.what() << "\n";
    return is_config_error(err.code()) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& ex) {
    std::cerr << "plugsim: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
