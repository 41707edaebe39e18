#include "plugsim/sim/runner.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <thread>
#include <unistd.h>

#include "plugsim/coord/control.hpp"
#include "plugsim/coord/dr.hpp"
#include "plugsim/cosim/gateway.hpp"
#include "plugsim/error.hpp"
#include "plugsim/hmi/bridge.hpp"
#include "plugsim/ingest/agents.hpp"

namespace plugsim::sim {

using agent::AgentConfig;
using agent::InterfaceKind;
using Json = nlohmann::json;

namespace {

// Holds at the start instant until armed, then runs `speedup` times faster
// than the wall.
class LaunchClock final : public agent::Clock {
 public:
  LaunchClock(std::int64_t start_ms, double speedup) : start_ms_(start_ms), speedup_(speedup) {}

  void arm() { wall0_ns_.store(std::chrono::steady_clock::now().time_since_epoch().count()); }

  std::int64_t now_ms() const override {
    auto w0 = wall0_ns_.load();
    if (w0 == 0) return start_ms_;
    double elapsed_ms = static_cast<double>(std::chrono::steady_clock::now().time_since_epoch().count() - w0) / 1e6;
    return start_ms_ + static_cast<std::int64_t>(elapsed_ms * speedup_);
  }

  agent::SteadyTime wall_at(std::int64_t ms) const override {
    auto w0 = wall0_ns_.load();
    auto base = w0 == 0 ? std::chrono::steady_clock::now()
                        : agent::SteadyTime(std::chrono::steady_clock::duration(w0));
    auto offset = std::chrono::duration<double, std::milli>(static_cast<double>(ms - start_ms_) / speedup_);
    return base + std::chrono::duration_cast<std::chrono::steady_clock::duration>(offset);
  }

 private:
  std::int64_t start_ms_;
  double speedup_;
  std::atomic<std::int64_t> wall0_ns_{0};
};

std::int64_t to_ms(double s) { return std::llround(s * 1000.0); }

AgentConfig base_config(std::string id, InterfaceKind kind, double heartbeat_s, const net::Endpoint& bus) {
  AgentConfig c;
  c.agent_id = std::move(id);
  c.interface_kind = kind;
  c.heartbeat_s = heartbeat_s;
  c.bus_endpoint = bus;
  return c;
}

std::unique_ptr<agent::Agent> make_driver(AgentConfig cfg, const Json& block) {
  auto device = ingest::VirtualDevice::from_json(block);
  auto reads = block.value("reads", std::vector<std::string>{});
  auto binding = ingest::default_binding(device, block.value("building", std::string("home")), reads);
  return std::make_unique<ingest::DriverAgent>(std::move(cfg), std::move(device), std::move(binding));
}

Json bridge_devices(const ScenarioConfig& cfg) {
  Json out = Json::array();
  for (const auto& d : cfg.devices) {
    auto device = ingest::VirtualDevice::from_json(d.block);
    auto binding = ingest::default_binding(device, d.building, d.reads);
    std::vector<std::string> writes;
    for (const auto& [topic, point] : binding.writes) writes.push_back(topic);
    out.push_back({{"id", d.id}, {"kind", d.kind}, {"building", d.building}, {"writes", writes}});
  }
  return out;
}

Json events_json(const std::vector<coord::DemandResponseEvent>& events) {
  Json out = Json::array();
  for (const auto& e : events) {
    auto j = e.to_json("scheduled");
    j.erase("status");
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

std::vector<std::unique_ptr<agent::Agent>> build_agents(const ScenarioConfig& cfg, const net::Endpoint& bus,
                                                        const std::filesystem::path& historian_path) {
  std::vector<std::unique_ptr<agent::Agent>> out;
  std::set<std::string> ids;
  for (const auto& a : cfg.agents) ids.insert(a.agent_id);
  auto claim = [&](const std::string& id, const std::string& field) {
    if (ids.count(id)) throw Error(Errc::ConfigInvalid, field + ": agent id '" + id + "' is reserved");
    ids.insert(id);
  };

  for (std::size_t i = 0; i < cfg.devices.size(); ++i) {
    const auto& d = cfg.devices[i];
    const auto id = "driver-" + d.id;
    claim(id, "devices[" + std::to_string(i) + "].id");
    out.push_back(make_driver(base_config(id, InterfaceKind::VirtualDevice, d.heartbeat_s, bus), d.block));
  }

  bool has_dr = false, has_bridge = false, has_historian = false;
  for (const auto& a : cfg.agents) {
    has_dr |= a.interface_kind == InterfaceKind::Dr;
    has_bridge |= a.interface_kind == InterfaceKind::Bridge;
    has_historian |= a.interface_kind == InterfaceKind::Historian;
  }
  if (!has_dr && (!cfg.dr_events.empty() || has_bridge)) {
    claim("dr", "dr_events");
    out.push_back(std::make_unique<coord::DrAgent>(
        base_config("dr", InterfaceKind::Dr, cfg.sim.timestep_s, bus), cfg.dr_events));
  }

  bool historian_claimed = false;
  for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
    auto a = cfg.agents[i];
    a.bus_endpoint = bus;
    const auto where = "agents[" + std::to_string(i) + "]";
    try {
      switch (a.interface_kind) {
        case InterfaceKind::VirtualDevice:
          out.push_back(make_driver(a, a.params));
          break;
        case InterfaceKind::CsvReplay:
          out.push_back(std::make_unique<ingest::ReplayAgent>(a));
          break;
        case InterfaceKind::Cosim:
          out.push_back(std::make_unique<cosim::GatewayAgent>(a));
          break;
        case InterfaceKind::Control:
          out.push_back(std::make_unique<coord::ShedAgent>(a));
          break;
        case InterfaceKind::Dr:
          if (!a.params.contains("events") && !cfg.dr_events.empty()) a.params["events"] = events_json(cfg.dr_events);
          out.push_back(std::make_unique<coord::DrAgent>(a));
          break;
        case InterfaceKind::Historian: {
          if (!a.params.contains("out") && !historian_claimed) {
            a.params["out"] = historian_path.string();
            historian_claimed = true;
          }
          out.push_back(std::make_unique<ingest::HistorianAgent>(a));
          break;
        }
        case InterfaceKind::Bridge:
          if (!a.params.contains("devices")) a.params["devices"] = bridge_devices(cfg);
          if (!a.params.contains("mode")) a.params["mode"] = std::string(to_string(cfg.sim.mode));
          if (!a.params.contains("demand_window_s")) a.params["demand_window_s"] = cfg.outputs.demand_window_s;
          if (!a.params.contains("demand_rate_per_kw")) a.params["demand_rate_per_kw"] = cfg.outputs.demand_rate_per_kw;
          out.push_back(std::make_unique<hmi::BridgeAgent>(a));
          break;
      }
    } catch (const Error& err) {
      if (err.code() == Errc::AddressInUse) throw Error(Errc::AgentStartupFailure, a.agent_id + ": " + err.what());
      throw Error(err.code(), where + "." + err.detail());
    }
  }

  if (cfg.outputs.historian && !has_historian) {
    claim("historian", "outputs.historian");
    auto hc = base_config("historian", InterfaceKind::Historian, cfg.sim.timestep_s, bus);
    hc.params = {{"patterns", cfg.outputs.historian_patterns}, {"out", historian_path.string()}};
    out.push_back(std::make_unique<ingest::HistorianAgent>(hc));
  }
  return out;
}

Simulation::Simulation(ScenarioConfig cfg, RunOptions opts)
    : cfg_(std::move(cfg)), opts_(std::move(opts)), mode_(opts_.mode.value_or(cfg_.sim.mode)) {
  cfg_.sim.mode = mode_;
  if (opts_.seed) cfg_.seed = *opts_.seed;
  if (!opts_.out_dir.empty()) {
    std::filesystem::create_directories(opts_.out_dir);
    historian_path_ = opts_.out_dir / "historian.csv";
  } else {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("plugsim-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    historian_path_ = dir / "historian.csv";
    temp_historian_ = true;
  }
}

Simulation::~Simulation() {
  stop_all();
  agents_.clear();
  if (broker_) broker_->stop();
  if (temp_historian_) {
    std::error_code ec;
    std::filesystem::remove_all(historian_path_.parent_path(), ec);
  }
}

net::Endpoint Simulation::bus_endpoint() const { return broker_ ? broker_->endpoint() : net::Endpoint{}; }

std::int64_t Simulation::now_ms() const { return clock_ ? clock_->now_ms() : to_ms(cfg_.sim.start_s); }

agent::Agent* Simulation::find_agent(std::string_view id) {
  for (auto& a : agents_) {
    if (a->id() == id) return a.get();
  }
  return nullptr;
}

void Simulation::start_all() {
  broker_ = std::make_unique<bus::Broker>(cfg_.broker_port);
  broker_->start();
  const auto start_ms = to_ms(cfg_.sim.start_s);
  if (mode_ == SimMode::Lockstep) {
    clock_ = std::make_shared<agent::ManualClock>(start_ms);
  } else {
    clock_ = std::make_shared<LaunchClock>(start_ms, cfg_.sim.speedup);
  }
  agents_ = build_agents(cfg_, broker_->endpoint(), historian_path_);
  for (auto& a : agents_) {
    try {
      a->start(clock_, agent::RetryPolicy{std::chrono::milliseconds(100), std::chrono::milliseconds(1000), 3});
    } catch (const std::exception& ex) {
      throw Error(Errc::AgentStartupFailure, a->id() + ": " + ex.what());
    }
  }
}

void Simulation::stop_all() {
  for (auto& a : agents_) {
    if (!a->started()) continue;
    try {
      a->stop();
    } catch (const std::exception& ex) {
      a->log(agent::LogLevel::Error, std::string("stop failed: ") + ex.what());
    }
  }
}

void Simulation::run_lockstep() {
  auto clock = std::static_pointer_cast<agent::ManualClock>(clock_);
  agent::BusClient ticker("clock", broker_->endpoint());
  ticker.connect();
  const auto start_ms = to_ms(cfg_.sim.start_s);
  const auto dt_ms = to_ms(cfg_.sim.timestep_s);
  const auto n = cfg_.sim.ticks();
  for (std::int64_t k = 0; k < n; ++k) {
    if (opts_.stop.stop_requested()) break;
    const auto t = start_ms + k * dt_ms;
    clock->set(t);
    ticker.publish(bus::make_pub("clock/tick", Json{{"t_s", static_cast<double>(t) / 1000.0}}, "clock", t));
    ticker.sync();
    for (auto& a : agents_) a->tick(t);
    ticks_ = k + 1;
  }
  clock->set(to_ms(cfg_.sim.end_s));
  for (auto& a : agents_) a->drain();
  ticker.close();
}

void Simulation::run_realtime() {
  auto clock = std::static_pointer_cast<LaunchClock>(clock_);
  agent::BusClient ticker("clock", broker_->endpoint());
  ticker.connect();
  const auto start_ms = to_ms(cfg_.sim.start_s);
  const auto end_ms = to_ms(cfg_.sim.end_s);
  const auto dt_ms = to_ms(cfg_.sim.timestep_s);
  const auto n = cfg_.sim.ticks();

  std::vector<std::jthread> threads;
  clock->arm();
  for (auto& a : agents_) {
    threads.emplace_back(
        [agent = a.get(), start_ms, end_ms](std::stop_token st) { agent->run_realtime(st, end_ms, start_ms); });
  }
  for (std::int64_t k = 0; k < n; ++k) {
    if (opts_.stop.stop_requested()) break;
    const auto t = start_ms + k * dt_ms;
    std::this_thread::sleep_until(clock->wall_at(t));
    ticker.publish(bus::make_pub("clock/tick", Json{{"t_s", static_cast<double>(t) / 1000.0}}, "clock", t));
    ticks_ = k + 1;
  }
  if (!opts_.stop.stop_requested()) std::this_thread::sleep_until(clock->wall_at(end_ms));
  for (auto& t : threads) {
    t.request_stop();
    t.join();
  }
  ticker.close();
}

RunReport Simulation::run() {
  try {
    start_all();
    if (opts_.on_started) opts_.on_started(*this);
    if (mode_ == SimMode::Lockstep) {
      run_lockstep();
    } else {
      run_realtime();
    }
  } catch (...) {
    stop_all();
    throw;
  }
  stop_all();
  return finish_report();
}

RunReport Simulation::finish_report() {
  RunReport report;
  std::vector<ingest::PointRecord> rows;
  bool have_historian = false;
  for (auto& a : agents_) {
    auto* h = dynamic_cast<ingest::HistorianAgent*>(a.get());
    if (h != nullptr && h->path() == historian_path_) have_historian = true;
  }
  if (have_historian) {
    rows = ingest::read_point_csv(historian_path_);
    ReportOptions ro;
    ro.start_s = cfg_.sim.start_s;
    ro.end_s = cfg_.sim.end_s;
    ro.dt_s = cfg_.sim.timestep_s;
    ro.window_s = cfg_.outputs.demand_window_s;
    ro.rate_per_kw = cfg_.outputs.demand_rate_per_kw;
    report = make_report(rows, ro);
  }
  report.scenario = cfg_.name;
  report.mode = std::string(to_string(mode_));
  report.seed = cfg_.seed;
  report.ticks = ticks_;
  report.demand_window_s = cfg_.outputs.demand_window_s;
  report.demand_rate_per_kw = cfg_.outputs.demand_rate_per_kw;
  for (auto& a : agents_) {
    if (auto* shed = dynamic_cast<coord::ShedAgent*>(a.get())) {
      for (auto& e : shed->events()) report.shed_events.push_back(std::move(e));
    }
    if (auto* dr = dynamic_cast<coord::DrAgent*>(a.get())) {
      for (auto& e : dr->history()) report.dr_events.push_back(std::move(e));
    }
    for (auto& line : a->log().lines()) report.logs.push_back(std::move(line));
  }
  report.message_counts = broker_->stats().publishes_by_prefix;
  if (!opts_.out_dir.empty()) {
    write_report_artifacts(report, opts_.out_dir);
    if (!cfg_.outputs.report_path.empty()) {
      auto path = cfg_.outputs.report_path.is_absolute() ? cfg_.outputs.report_path
                                                          : opts_.out_dir / cfg_.outputs.report_path;
      std::ofstream(path) << report.to_json().dump(2) << "\n";
    }
  }
  return report;
}

RunReport run_lockstep(const ScenarioConfig& cfg, RunOptions opts) {
  opts.mode = SimMode::Lockstep;
  Simulation sim(cfg, std::move(opts));
  return sim.run();
}

RunReport run_realtime(const ScenarioConfig& cfg, RunOptions opts) {
  opts.mode = SimMode::Realtime;
  Simulation sim(cfg, std::move(opts));
  return sim.run();
}

}  // namespace plugsim::sim
