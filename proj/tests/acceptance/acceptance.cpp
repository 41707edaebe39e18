#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../support/oracles.hpp"
#include "../support/test_util.hpp"
#include "plugsim/agent/agent.hpp"
#include "plugsim/agent/bus_client.hpp"
#include "plugsim/bus/broker.hpp"
#include "plugsim/bus/envelope.hpp"
#include "plugsim/coord/planner.hpp"
#include "plugsim/coord/shed.hpp"
#include "plugsim/cosim/gateway.hpp"
#include "plugsim/cosim/stub.hpp"
#include "plugsim/error.hpp"
#include "plugsim/ingest/agents.hpp"
#include "plugsim/ingest/csv.hpp"
#include "plugsim/models/refrigerator.hpp"
#include "plugsim/sim/runner.hpp"
#include "plugsim/sim/scenario.hpp"

using namespace plugsim;
using Json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

bool run_criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& ex) {
    out = {false, std::string("exception: ") + ex.what()};
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = elapsed < limit_s;
  const bool pass = out.pass && in_time;
  std::printf("%s %s (%.2f s, limit %.0f s%s) %s\n", pass ? "PASS" : "FAIL", name.c_str(), elapsed, limit_s,
              in_time ? "" : ", too slow", out.detail.c_str());
  std::fflush(stdout);
  return pass;
}

// ---- envelopes -------------------------------------------------------------

std::string random_segment(std::mt19937& rng) {
  static const std::vector<std::string> words{"devices", "home", "fridge1", "power", "dr", "events",
                                              "b-2", "x_y", "Zone.3"};
  return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
}

std::string random_topic(std::mt19937& rng, int max_depth = 4) {
  std::string out;
  for (int i = 0, n = std::uniform_int_distribution<int>(1, max_depth)(rng); i < n; ++i) {
    out += (i ? "/" : "") + random_segment(rng);
  }
  return out;
}

Json random_payload(std::mt19937& rng, int depth = 0) {
  switch (std::uniform_int_distribution<int>(0, depth > 1 ? 4 : 6)(rng)) {
    case 0: return nullptr;
    case 1: return std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    case 2: return std::uniform_int_distribution<std::int64_t>(-1'000'000'000'000, 1'000'000'000'000)(rng);
    case 3: {
      std::uniform_real_distribution<double> mant(-1, 1);
      std::uniform_int_distribution<int> expo(-30, 30);
      return std::ldexp(mant(rng), expo(rng));
    }
    case 4: return "s\"\\\n\t\xc3\xa9t\xc3\xa9 " + random_segment(rng);
    case 5: {
      Json arr = Json::array();
      for (int i = 0, n = std::uniform_int_distribution<int>(0, 4)(rng); i < n; ++i) {
        arr.push_back(random_payload(rng, depth + 1));
      }
      return arr;
    }
    default: {
      Json obj = Json::object();
      for (int i = 0, n = std::uniform_int_distribution<int>(0, 4)(rng); i < n; ++i) {
        obj[random_segment(rng) + std::to_string(i)] = random_payload(rng, depth + 1);
      }
      return obj;
    }
  }
}

bus::MessageEnvelope random_envelope(std::mt19937& rng) {
  bus::Headers headers;
  for (int i = 0, n = std::uniform_int_distribution<int>(0, 3)(rng); i < n; ++i) {
    headers["h" + std::to_string(i)] = random_segment(rng) + " \xe2\x9c\x93";
  }
  const auto sender = "agent-" + std::to_string(std::uniform_int_distribution<int>(0, 99)(rng));
  const auto ts = std::uniform_int_distribution<std::int64_t>(0, 4'000'000'000'000)(rng);
  switch (std::uniform_int_distribution<int>(0, 9)(rng)) {
    case 0: return bus::make_control(bus::FrameKind::Sub, sender, random_topic(rng), headers);
    case 1: return bus::make_control(bus::FrameKind::Unsub, sender, random_topic(rng), headers);
    case 2: return bus::make_control(bus::FrameKind::Ping, sender, {}, headers);
    default: return bus::make_pub(random_topic(rng), random_payload(rng), sender, ts, headers);
  }
}

std::string mutate(const std::string& frame, int how) {
  auto obj = Json::parse(frame);
  switch (how) {
    case 0: return frame.substr(0, frame.size() / 2) + "\n";
    case 1: return frame.substr(0, frame.size() - 1);
    case 2: obj["v"] = 2; break;
    case 3: obj.erase("v"); break;
    case 4: obj["kind"] = "NOPE"; break;
    case 5:
      obj["kind"] = "PUB";
      obj.erase("topic");
      break;
    case 6:
      obj["kind"] = "PUB";
      obj["topic"] = "devices//x";
      break;
    case 7: obj["ts_ms"] = "soon"; break;
    case 8: obj["headers"] = Json{{"k", 1}}; break;
    case 9: return frame + frame;
    default: return Json::array({obj}).dump() + "\n";
  }
  return obj.dump() + "\n";
}

Outcome protocol_round_trip() {
  std::mt19937 rng(2024);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    auto msg = random_envelope(rng);
    auto frame = bus::encode_frame(msg);
    auto back = bus::decode_frame(frame);
    if (!(back == msg) || bus::encode_frame(back) != frame) ++mismatches;
  }
  int classified = 0, unclassified = 0;
  std::map<std::string, int> codes;
  for (int i = 0; i < 100; ++i) {
    auto frame = bus::encode_frame(random_envelope(rng));
    try {
      bus::decode_frame(mutate(frame, i % 11));
      ++unclassified;
    } catch (const Error& e) {
      const bool known = e.code() == Errc::MalformedFrame || e.code() == Errc::InvalidEnvelope ||
                         e.code() == Errc::UnsupportedVersion;
      known ? ++classified : ++unclassified;
      ++codes[std::string(to_string(e.code()))];
    } catch (...) {
      ++unclassified;
    }
  }
  std::string detail = "identity mismatches " + std::to_string(mismatches) + "/10000; mutated classified " +
                       std::to_string(classified) + "/100 (";
  for (const auto& [code, n] : codes) detail += code + "=" + std::to_string(n) + " ";
  detail.back() = ')';
  return {mismatches == 0 && classified == 100, detail};
}

// ---- routing ---------------------------------------------------------------

Outcome routing_oracle() {
  bus::Broker broker(0);
  broker.start();
  std::mt19937 rng(77);
  constexpr int kConnections = 5, kPerConnection = 4;
  std::vector<std::unique_ptr<agent::BusClient>> clients;
  std::vector<oracle::Sub> table;
  for (int c = 0; c < kConnections; ++c) {
    clients.push_back(std::make_unique<agent::BusClient>("sub" + std::to_string(c), broker.endpoint()));
    clients.back()->connect();
    for (int k = 0; k < kPerConnection; ++k) {
      auto pattern = random_topic(rng, 3);
      clients.back()->subscribe(pattern);
      table.push_back({static_cast<std::uint64_t>(c), pattern});
    }
    clients.back()->sync();
  }
  agent::BusClient pub("pub", broker.endpoint());
  pub.connect();
  std::vector<std::string> topics;
  for (int i = 0; i < 500; ++i) {
    topics.push_back(random_topic(rng));
    pub.publish(bus::make_pub(topics.back(), i, "pub", i));
  }
  pub.sync();
  int bad_connections = 0;
  std::size_t delivered = 0;
  for (int c = 0; c < kConnections; ++c) {
    std::vector<int> expected, got;
    for (int i = 0; i < 500; ++i) {
      for (auto who : oracle::route(table, topics[i])) {
        if (who == static_cast<std::uint64_t>(c)) expected.push_back(i);
      }
    }
    for (const auto& m : clients[c]->sync()) got.push_back(m.payload.get<int>());
    delivered += got.size();
    if (got != expected) ++bad_connections;
  }
  return {bad_connections == 0, std::to_string(kConnections * kPerConnection) + " subscriptions on " +
                                    std::to_string(kConnections) + " connections, " + std::to_string(delivered) +
                                    " deliveries, connections differing from oracle: " +
                                    std::to_string(bad_connections)};
}

// ---- scenarios ---------------------------------------------------------------

struct Run {
  sim::RunReport report;
  std::vector<ingest::PointRecord> rows;
};

Run run_scenario(const std::string& name, const std::filesystem::path& out) {
  sim::RunOptions opts;
  opts.out_dir = out;
  Run r;
  r.report = sim::run_lockstep(sim::load_scenario(testutil::scenario_path(name)), opts);
  r.rows = ingest::read_point_csv(out / "historian.csv");
  return r;
}

std::map<std::int64_t, double> series(const Run& run, const std::string& topic) {
  std::map<std::int64_t, double> out;
  for (const auto& r : run.rows) {
    if (r.topic == topic) out[r.ts_ms] = r.value;
  }
  return out;
}

constexpr std::int64_t kWindowsMs[3][2] = {{7920000, 9720000}, {36720000, 38520000}, {65520000, 67320000}};

bool in_window(std::int64_t t) {
  for (const auto& w : kWindowsMs) {
    if (t >= w[0] && t < w[1]) return true;
  }
  return false;
}

Outcome reference_windows() {
  testutil::TempDir dir;
  auto electric = run_scenario("defrost_electric", dir / "electric");
  auto off_cycle = run_scenario("defrost_offcycle", dir / "offcycle");
  const models::RefrigeratorParams p;
  const double spike_w = p.parasitic_w + p.compressor_w;
  int heater_violations = 0, off_violations = 0, spike_violations = 0;

  auto heater = series(electric, "devices/home/fridge1/heater_power");
  for (const auto& [t, w] : heater) {
    if ((w > 0) != in_window(t)) ++heater_violations;
  }
  if (heater.size() != 1440) ++heater_violations;
  auto off_power = series(off_cycle, "devices/home/fridge1/power");
  for (const auto& [t, w] : off_power) {
    if (in_window(t) && w != p.parasitic_w) ++off_violations;
  }
  for (const auto* run : {&electric, &off_cycle}) {
    auto power = series(*run, "devices/home/fridge1/power");
    for (const auto& w : kWindowsMs) {
      for (int m = 0; m < 5; ++m) {
        auto it = power.find(w[1] + m * 60000);
        if (it == power.end() || it->second < spike_w) ++spike_violations;
      }
    }
  }
  return {heater_violations == 0 && off_violations == 0 && spike_violations == 0,
          "heater-window mismatches " + std::to_string(heater_violations) + ", off-cycle P != P_par in window " +
              std::to_string(off_violations) + ", post-window minutes below " + fmt(spike_w) + " W: " +
              std::to_string(spike_violations) + "/30"};
}

Outcome electric_vs_off_cycle() {
  testutil::TempDir dir;
  auto electric = run_scenario("defrost_electric", dir / "electric");
  auto off_cycle = run_scenario("defrost_offcycle", dir / "offcycle");
  const double e = electric.report.device("fridge1")->energy_kwh;
  const double o = off_cycle.report.device("fridge1")->energy_kwh;
  return {e > o, "electric " + fmt(e) + " kWh > off-cycle " + fmt(o) + " kWh"};
}

Outcome peak_shaving() {
  testutil::TempDir dir;
  auto base = run_scenario("peak_baseline", dir / "baseline");
  auto shifted = run_scenario("peak_shifted", dir / "shifted");
  if (!base.report.rolling_peak_w || !shifted.report.rolling_peak_w) return {false, "missing rolling peak"};
  const double pb = *base.report.rolling_peak_w, ps = *shifted.report.rolling_peak_w;
  const double cb = *base.report.demand_charge, cs = *shifted.report.demand_charge;
  return {ps <= pb && cs <= cb, "rolling 15-min peak " + fmt(ps) + " <= " + fmt(pb) + " W, demand charge " +
                                    fmt(cs) + " <= " + fmt(cb)};
}

// ---- optimizer ---------------------------------------------------------------

bool independently_feasible(const std::vector<int>& starts, int cycles, int gap_slots, int slots) {
  if (static_cast<int>(starts.size()) != cycles) return false;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (starts[i] < 0 || starts[i] >= slots) return false;
    if (i > 0 && starts[i] <= starts[i - 1]) return false;
  }
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const int next = i + 1 < starts.size() ? starts[i + 1] : starts[0] + slots;
    if (cycles > 1 && next - starts[i] < gap_slots) return false;
  }
  return true;
}

Outcome optimizer_oracle() {
  constexpr double kTol = 1e-6;
  constexpr int kSlots = 48;
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> bg(0, 3000), hi(200, 2500), lo(100, 1600);
  int resampled = 0, exhaustive_bad = 0, reverify_bad = 0, greedy_bad = 0, equal = 0;
  std::uint64_t total_candidates = 0;
  for (int inst = 0; inst < 100; ++inst) {
    coord::DefrostPlanProblem p;
    std::vector<oracle::PlanUnit> ou;
    std::uint64_t product = 0;
    while (true) {
      p = {};
      ou.clear();
      p.slot_s = 1800;
      for (int s = 0; s < kSlots; ++s) p.background_w.push_back(bg(rng));
      const int n = std::uniform_int_distribution<int>(1, 3)(rng);
      for (int u = 0; u < n; ++u) {
        const int cycles = std::uniform_int_distribution<int>(1, 2)(rng);
        const int duration_slots = std::uniform_int_distribution<int>(1, 2)(rng);
        const int gap = std::uniform_int_distribution<int>(duration_slots, kSlots / cycles)(rng);
        const double duration = 1800.0 * duration_slots;
        std::vector<double> tmpl(static_cast<std::size_t>(duration), hi(rng));
        tmpl.resize(tmpl.size() + std::uniform_int_distribution<int>(0, 2700)(rng), lo(rng));
        p.units.push_back({"u" + std::to_string(u), cycles, duration, gap * p.slot_s, tmpl});
        ou.push_back({cycles, gap, tmpl});
      }
      product = 1;
      for (const auto& u : p.units) {
        product *= coord::unit_candidates(p, u).size();
        if (product > coord::kExhaustiveGuard) break;
      }
      if (product <= coord::kExhaustiveGuard) break;
      ++resampled;
    }
    auto ex = coord::plan_defrost(p, coord::PlanMode::Exhaustive);
    std::uint64_t count = 0;
    const double best = oracle::plan_minimum(p.background_w, p.slot_s, ou, count);
    total_candidates += count;
    if (count != product || ex.achieved_peak_w > best + kTol) ++exhaustive_bad;

    std::vector<std::vector<int>> starts;
    bool feasible = true;
    for (std::size_t u = 0; u < p.units.size(); ++u) {
      starts.push_back(ex.schedule.at(p.units[u].unit_id));
      feasible &= independently_feasible(starts.back(), ou[u].cycles, ou[u].gap_slots, kSlots);
    }
    if (!feasible || std::abs(oracle::plan_peak(p.background_w, p.slot_s, ou, starts) - ex.achieved_peak_w) > kTol) {
      ++reverify_bad;
    }
    auto gr = coord::plan_defrost(p, coord::PlanMode::Greedy);
    if (gr.achieved_peak_w < ex.achieved_peak_w - kTol) ++greedy_bad;
    if (std::abs(gr.achieved_peak_w - ex.achieved_peak_w) <= kTol) ++equal;
  }
  return {exhaustive_bad == 0 && reverify_bad == 0 && greedy_bad == 0,
          "exhaustive above enumeration minimum " + std::to_string(exhaustive_bad) +
              "/100, schedule re-verification failures " + std::to_string(reverify_bad) +
              ", greedy below exhaustive " + std::to_string(greedy_bad) + ", greedy == exhaustive " +
              std::to_string(equal) + "/100, " + std::to_string(total_candidates) + " candidates enumerated, " +
              std::to_string(resampled) + " draws over the guard resampled"};
}

// ---- shedding ----------------------------------------------------------------

Outcome shed_correctness() {
  std::mt19937 rng(5150);
  std::uniform_int_distribution<int> n_loads(1, 6), coin(0, 3);
  std::uniform_real_distribution<double> watts(100, 8000), lim(1000, 30000);
  int wrong = 0, enlarged = 0, checks = 0;
  for (int inst = 0; inst < 50; ++inst) {
    coord::ShedPolicy p;
    std::vector<oracle::Load> ol;
    std::vector<int> prios{1, 2, 3, 4, 5, 6, 7, 8};
    std::shuffle(prios.begin(), prios.end(), rng);
    const int n = n_loads(rng);
    for (int i = 0; i < n; ++i) {
      coord::ShedLoad l{"d" + std::to_string(i), "x/d" + std::to_string(i), prios[i], coin(rng) != 0, watts(rng)};
      p.loads.push_back(l);
      ol.push_back({l.priority, l.sheddable, l.est_power_w});
    }
    p.limit_w = lim(rng);
    const double measured = lim(rng) + 5000;
    auto d = coord::priority_shed(p, measured, {});
    std::vector<std::string> expected;
    for (auto i : oracle::minimal_shed_prefix(ol, measured, p.limit_w)) expected.push_back(p.loads[i].device_id);
    if (d.state.shed != expected) ++wrong;

    auto prev = d.state.shed;
    auto raised = p;
    for (int step = 0; step < 10; ++step) {
      raised.limit_w += watts(rng) / 2;
      auto shed = coord::priority_shed(raised, measured, {}).state.shed;
      std::set<std::string> before(prev.begin(), prev.end());
      ++checks;
      if (shed.size() > prev.size() ||
          !std::all_of(shed.begin(), shed.end(), [&](const std::string& id) { return before.count(id) > 0; })) {
        ++enlarged;
      }
      prev = shed;
    }
  }
  return {wrong == 0 && enlarged == 0, "differs from subset oracle " + std::to_string(wrong) +
                                           "/50, raised-limit checks enlarging the set " + std::to_string(enlarged) +
                                           "/" + std::to_string(checks)};
}

// ---- determinism -------------------------------------------------------------

Outcome determinism() {
  testutil::TempDir dir;
  run_scenario("defrost_electric", dir / "a");
  run_scenario("defrost_electric", dir / "b");
  const auto ha = testutil::read_file(dir / "a" / "historian.csv");
  const auto hb = testutil::read_file(dir / "b" / "historian.csv");
  const auto ra = testutil::read_file(dir / "a" / "report.json");
  const auto rb = testutil::read_file(dir / "b" / "report.json");
  const bool ok = !ha.empty() && !ra.empty() && ha == hb && ra == rb;
  return {ok, "historian " + std::to_string(ha.size()) + " bytes " + (ha == hb ? "identical" : "DIFFER") +
                  ", report " + std::to_string(ra.size()) + " bytes " + (ra == rb ? "identical" : "DIFFER")};
}

// ---- co-simulation -------------------------------------------------------------

Outcome cosim_session() {
  Json doc{{"name", "cosim-zone"},
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
             {{"agent_id", "cosim"},
              {"interface_kind", "cosim"},
              {"heartbeat_s", 60},
              {"params",
               {{"port", 0},
                {"sim_id", "stub-zone"},
                {"output_topic_map", {{"zone_T", "sim/zone/temperature"}}},
                {"input_topic_map", {{"control/zone/cool_setpoint", "cool_setpoint"}}},
                {"input_defaults", {{"cool_setpoint", 24.0}}},
                {"timestep_s", 60}}}}}}};
  cosim::StubConfig sc;
  cosim::StubResult stub;
  std::jthread stub_thread;
  sim::RunOptions opts;
  opts.on_started = [&](sim::Simulation& s) {
    net::Endpoint ep{"127.0.0.1", s.agent_as<cosim::GatewayAgent>("cosim")->port()};
    stub_thread = std::jthread([&stub, &sc, ep] { stub = cosim::run_stub_simulator(ep, sc); });
  };
  sim::Simulation simulation(sim::parse_scenario(doc), opts);
  simulation.run();
  stub_thread.join();
  auto* gw = simulation.agent_as<cosim::GatewayAgent>("cosim");

  const double fixed = oracle::zone_fixed_point(sc.ua_w_per_k, sc.cooling_gain_w_per_k, sc.outdoor_c, 22.0);
  const bool counts = stub.steps_sent == 1440 && gw->steps() == gw->controls() &&
                      static_cast<int>(gw->controls()) == stub.controls_received && stub.controls_received == 1440;
  const bool change = stub.setpoints.size() > 60 && stub.times[60] == 3600.0 && stub.setpoints[60] == 22.0 &&
                      stub.setpoints[59] == 24.0;
  const double final_c = stub.zone_c.empty() ? NAN : stub.zone_c.back();
  const bool converged = std::abs(final_c - fixed) < 0.1;
  return {stub.exit_status == 0 && counts && change && converged,
          "STEP " + std::to_string(gw->steps()) + " / CONTROL " + std::to_string(gw->controls()) +
              ", CONTROL(3600) setpoint " + (stub.setpoints.size() > 60 ? fmt(stub.setpoints[60]) : "-") +
              ", final zone " + fmt(final_c) + " C vs fixed point " + fmt(fixed) + " C (tol 0.1)"};
}

// ---- ingest ------------------------------------------------------------------

Outcome ingest_round_trip() {
  testutil::TempDir dir;
  std::mt19937 rng(31337);
  std::uniform_int_distribution<std::int64_t> ts(0, 86'399'999);
  std::uniform_real_distribution<double> mant(-1, 1);
  std::uniform_int_distribution<int> expo(-20, 40), meter(0, 49);
  std::vector<ingest::PointRecord> rows;
  for (int i = 0; i < 10000; ++i) {
    rows.push_back({ts(rng), "site/m" + std::to_string(meter(rng)) + "/power", std::ldexp(mant(rng), expo(rng)), ""});
  }
  ingest::write_point_csv(dir / "in.csv", rows);

  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<agent::ManualClock>();
  agent::AgentConfig rc;
  rc.agent_id = "replay";
  rc.bus_endpoint = broker.endpoint();
  rc.heartbeat_s = 60;
  rc.params = {{"path", (dir / "in.csv").string()}};
  agent::AgentConfig hc = rc;
  hc.agent_id = "historian";
  hc.params = {{"patterns", {"site"}}, {"out", (dir / "out.csv").string()}};
  ingest::ReplayAgent replay(rc);
  ingest::HistorianAgent historian(hc);
  replay.start(clock);
  historian.start(clock);
  for (std::int64_t t = 0; t < 86'400'000; t += 60'000) {
    clock->set(t);
    replay.tick(t);
    historian.tick(t);
  }
  clock->set(86'400'000);
  replay.tick(86'400'000);
  historian.drain();
  historian.stop();
  replay.stop();

  auto expected = ingest::read_point_csv(dir / "in.csv");
  auto got = ingest::read_point_csv(dir / "out.csv");
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < std::min(expected.size(), got.size()); ++i) {
    const auto& a = expected[i];
    const auto& b = got[i];
    if (a.ts_ms != b.ts_ms || a.topic != b.topic || a.value != b.value) ++mismatched;
  }
  return {got.size() == 10000 && expected.size() == 10000 && mismatched == 0,
          std::to_string(got.size()) + "/10000 rows recorded, " + std::to_string(mismatched) +
              " triples differing"};
}

}  // namespace

int main() {
  int failures = 0;
  failures += !run_criterion("protocol-round-trip", 5, protocol_round_trip);
  failures += !run_criterion("routing-oracle", 10, routing_oracle);
  failures += !run_criterion("defrost-schedule", 30, reference_windows);
  failures += !run_criterion("electric-vs-off-cycle-energy", 30, electric_vs_off_cycle);
  failures += !run_criterion("peak-shaving", 60, peak_shaving);
  failures += !run_criterion("optimizer-oracle", 120, optimizer_oracle);
  failures += !run_criterion("shed-correctness", 5, shed_correctness);
  failures += !run_criterion("lockstep-determinism", 60, determinism);
  failures += !run_criterion("cosim-session", 20, cosim_session);
  failures += !run_criterion("ingest-round-trip", 10, ingest_round_trip);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
