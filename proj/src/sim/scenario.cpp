#include "plugsim/sim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"
#include "plugsim/ingest/device.hpp"
#include "plugsim/models/profile.hpp"

namespace plugsim::sim {

using Json = nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why = {}) {
  throw Error(Errc::ConfigInvalid, why.empty() ? field : field + ": " + why);
}

double number_at(const Json& obj, const char* key, double fallback, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_number()) invalid(path + key, "expected a number");
  double v = it->get<double>();
  if (!std::isfinite(v)) invalid(path + key, "not finite");
  return v;
}

const Json& object_at(const Json& doc, const char* key, const std::string& path) {
  static const Json empty = Json::object();
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return empty;
  if (!it->is_object()) invalid(path + key, "expected an object");
  return *it;
}

const Json& array_at(const Json& doc, const char* key) {
  static const Json empty = Json::array();
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return empty;
  if (!it->is_array()) invalid(key, "expected an array");
  return *it;
}

bool divides(double step, double span) {
  double ratio = span / step;
  return std::abs(ratio - std::round(ratio)) < 1e-9;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

SimSettings parse_sim(const Json& j) {
  SimSettings s;
  s.start_s = number_at(j, "start_s", s.start_s, "sim.");
  s.end_s = number_at(j, "end_s", s.end_s, "sim.");
  s.timestep_s = number_at(j, "timestep_s", s.timestep_s, "sim.");
  s.speedup = number_at(j, "speedup", s.speedup, "sim.");
  if (auto it = j.find("mode"); it != j.end()) {
    auto mode = it->is_string() ? parse_sim_mode(it->get<std::string>()) : std::nullopt;
    if (!mode) invalid("sim.mode", "expected LOCKSTEP or REALTIME");
    s.mode = *mode;
  }
  if (!(s.end_s > s.start_s)) invalid("sim.end_s", "must exceed start_s");
  if (!(s.timestep_s > 0) || agent::period_ms(s.timestep_s) <= 0) invalid("sim.timestep_s", "must be positive");
  if (!divides(s.timestep_s, s.end_s - s.start_s)) invalid("sim.timestep_s", "must divide end_s - start_s");
  if (!(s.speedup > 0)) invalid("sim.speedup", "must be positive");
  return s;
}

DeviceSpec parse_device(const Json& j, std::size_t index, const SimSettings& sim,
                        const std::filesystem::path& base) {
  const auto path = "devices[" + std::to_string(index) + "].";
  if (!j.is_object()) invalid("devices[" + std::to_string(index) + "]", "expected an object");
  DeviceSpec d;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) invalid(path + "id");
  d.id = id->get<std::string>();
  if (!bus::is_valid_topic(d.id) || d.id.find('/') != std::string::npos) invalid(path + "id", "not a topic segment");
  auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) invalid(path + "kind");
  d.kind = kind->get<std::string>();
  if (auto b = j.find("building"); b != j.end()) {
    if (!b->is_string() || !bus::is_valid_topic(b->get<std::string>()) ||
        b->get<std::string>().find('/') != std::string::npos) {
      invalid(path + "building");
    }
    d.building = b->get<std::string>();
  }
  d.heartbeat_s = number_at(j, "heartbeat_s", sim.timestep_s, path);
  if (!(d.heartbeat_s > 0) || !divides(sim.timestep_s, d.heartbeat_s)) {
    invalid(path + "heartbeat_s", "must be a positive multiple of sim.timestep_s");
  }
  if (auto r = j.find("reads"); r != j.end()) {
    if (!r->is_array()) invalid(path + "reads");
    for (const auto& p : *r) {
      if (!p.is_string()) invalid(path + "reads");
      d.reads.push_back(p.get<std::string>());
    }
  }
  d.block = j;
  if (d.block.contains("params") && d.block["params"].is_object()) {
    auto& params = d.block["params"];
    if (params.contains("profile_csv") && params["profile_csv"].is_string()) {
      params["profile_csv"] = resolve(base, params["profile_csv"].get<std::string>()).string();
    }
  }
  try {
    (void)ingest::VirtualDevice::from_json(d.block);
  } catch (const Error& err) {
    invalid(path + "params", err.what());
  } catch (const Json::exception& ex) {
    invalid(path + "params", ex.what());
  }
  return d;
}

std::vector<double> background_from_device(const ScenarioConfig& cfg, const std::string& id, double slot_s,
                                           const std::string& field) {
  for (const auto& d : cfg.devices) {
    if (d.id != id) continue;
    if (d.kind != "load") invalid(field, "device '" + id + "' is not a load");
    auto device = ingest::VirtualDevice::from_json(d.block);
    const auto slots = static_cast<std::size_t>(std::llround(86400.0 / slot_s));
    const auto per_slot = static_cast<std::size_t>(std::llround(slot_s));
    std::vector<double> out(slots, 0.0);
    for (std::size_t k = 0; k < slots; ++k) {
      double sum = 0;
      for (std::size_t s = 0; s < per_slot; ++s) {
        device.step(static_cast<double>(k * per_slot + s), 1.0);
        sum += device.readings().at("power");
      }
      out[k] = sum / static_cast<double>(per_slot);
    }
    return out;
  }
  invalid(field, "unknown device '" + id + "'");
}

DefrostPlanSpec parse_plan(const Json& j, const ScenarioConfig& cfg) {
  DefrostPlanSpec p;
  p.slot_s = number_at(j, "slot_s", p.slot_s, "defrost_plan.");
  if (!(p.slot_s > 0) || !divides(p.slot_s, 86400.0)) invalid("defrost_plan.slot_s", "must divide 86400");
  if (auto m = j.find("mode"); m != j.end()) {
    if (!m->is_string()) invalid("defrost_plan.mode");
    try {
      p.mode = coord::parse_plan_mode(m->get<std::string>());
    } catch (const Error&) {
      invalid("defrost_plan.mode", "expected exhaustive or greedy");
    }
  }
  if (auto a = j.find("apply"); a != j.end()) {
    if (!a->is_boolean()) invalid("defrost_plan.apply");
    p.apply = a->get<bool>();
  }

  if (auto bw = j.find("background_w"); bw != j.end()) {
    if (!bw->is_array()) invalid("defrost_plan.background_w");
    for (const auto& v : *bw) {
      if (!v.is_number()) invalid("defrost_plan.background_w");
      p.background_w.push_back(v.get<double>());
    }
  } else if (auto dev = j.find("background_device"); dev != j.end()) {
    if (!dev->is_string()) invalid("defrost_plan.background_device");
    p.background_w = background_from_device(cfg, dev->get<std::string>(), p.slot_s, "defrost_plan.background_device");
  } else {
    p.background_w.assign(static_cast<std::size_t>(std::llround(86400.0 / p.slot_s)), 0.0);
  }

  const auto& units = j.find("units");
  if (units == j.end() || !units->is_array() || units->empty()) invalid("defrost_plan.units");
  for (std::size_t i = 0; i < units->size(); ++i) {
    const auto path = "defrost_plan.units[" + std::to_string(i) + "].";
    const auto& u = (*units)[i];
    if (!u.is_object()) invalid(path.substr(0, path.size() - 1));
    coord::PlanUnit unit;
    auto id = u.find("unit_id");
    if (id == u.end() || !id->is_string()) invalid(path + "unit_id");
    unit.unit_id = id->get<std::string>();
    unit.cycles = static_cast<int>(number_at(u, "cycles", 1, path));
    unit.duration_s = number_at(u, "duration_s", 1800, path);
    unit.min_gap_s = number_at(u, "min_gap_s", unit.duration_s, path);
    if (auto t = u.find("template"); t != u.end()) {
      if (!t->is_array()) invalid(path + "template");
      for (const auto& v : *t) {
        if (!v.is_number()) invalid(path + "template");
        unit.power_template.push_back(v.get<double>());
      }
    } else {
      const DeviceSpec* device = nullptr;
      for (const auto& d : cfg.devices) {
        if (d.id == unit.unit_id) device = &d;
      }
      if (device == nullptr || device->kind != "refrigerator") {
        invalid(path + "unit_id", "no refrigerator device '" + unit.unit_id + "'");
      }
      auto params = models::RefrigeratorParams::from_json(device->block.value("params", Json::object()));
      unit.power_template = coord::extract_defrost_template(params, unit.duration_s);
    }
    p.units.push_back(std::move(unit));
  }
  return p;
}

}  // namespace

std::string_view to_string(SimMode mode) noexcept {
  return mode == SimMode::Lockstep ? "LOCKSTEP" : "REALTIME";
}

std::optional<SimMode> parse_sim_mode(std::string_view text) noexcept {
  if (text == "LOCKSTEP" || text == "lockstep") return SimMode::Lockstep;
  if (text == "REALTIME" || text == "realtime") return SimMode::Realtime;
  return std::nullopt;
}

std::int64_t SimSettings::ticks() const {
  return std::llround((end_s - start_s) / timestep_s);
}

ScenarioConfig parse_scenario(const Json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(Errc::ConfigParse, "scenario must be an object");
  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  if (auto n = doc.find("name"); n != doc.end()) {
    if (!n->is_string()) invalid("name");
    cfg.name = n->get<std::string>();
  }
  cfg.sim = parse_sim(object_at(doc, "sim", ""));

  const auto& broker = object_at(doc, "broker", "");
  double port = number_at(broker, "port", 0, "broker.");
  if (port < 0 || port > 65535 || port != std::floor(port)) invalid("broker.port");
  cfg.broker_port = static_cast<std::uint16_t>(port);

  if (auto seed = doc.find("seed"); seed != doc.end()) {
    if (!seed->is_number_integer() || seed->get<std::int64_t>() < 0) invalid("seed");
    cfg.seed = seed->get<std::uint64_t>();
  }

  std::set<std::string> device_ids;
  const auto& devices = array_at(doc, "devices");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    auto d = parse_device(devices[i], i, cfg.sim, base_dir);
    if (!device_ids.insert(d.id).second) invalid("devices[" + std::to_string(i) + "].id", "duplicate");
    cfg.devices.push_back(std::move(d));
  }

  std::set<std::string> agent_ids;
  const auto& agents = array_at(doc, "agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto prefix = "agents[" + std::to_string(i) + "].";
    Json block = agents[i];
    if (block.is_object() && !block.contains("heartbeat_s")) block["heartbeat_s"] = cfg.sim.timestep_s;
    auto a = agent::load_agent_config(block, prefix);
    if (!agent_ids.insert(a.agent_id).second) invalid(prefix + "agent_id");
    if (!divides(cfg.sim.timestep_s, a.heartbeat_s)) {
      invalid(prefix + "heartbeat_s", "must be a multiple of sim.timestep_s");
    }
    if (a.interface_kind == agent::InterfaceKind::CsvReplay && a.params.contains("path") &&
        a.params["path"].is_string()) {
      a.params["path"] = resolve(base_dir, a.params["path"].get<std::string>()).string();
    }
    cfg.agents.push_back(std::move(a));
  }

  const auto& events = array_at(doc, "dr_events");
  for (std::size_t i = 0; i < events.size(); ++i) {
    try {
      cfg.dr_events.push_back(coord::DemandResponseEvent::from_json(events[i]));
    } catch (const Error& err) {
      invalid("dr_events[" + std::to_string(i) + "]." + err.detail());
    }
  }
  coord::validate_events(cfg.dr_events, "dr_events");

  const auto& outputs = object_at(doc, "outputs", "");
  if (auto hp = outputs.find("historian_patterns"); hp != outputs.end()) {
    if (!hp->is_array()) invalid("outputs.historian_patterns");
    cfg.outputs.historian_patterns.clear();
    for (const auto& p : *hp) {
      if (!p.is_string() || !bus::is_valid_topic(p.get<std::string>())) invalid("outputs.historian_patterns");
      cfg.outputs.historian_patterns.push_back(p.get<std::string>());
    }
  }
  if (auto h = outputs.find("historian"); h != outputs.end()) {
    if (!h->is_boolean()) invalid("outputs.historian");
    cfg.outputs.historian = h->get<bool>();
  }
  if (auto rp = outputs.find("report_path"); rp != outputs.end()) {
    if (!rp->is_string()) invalid("outputs.report_path");
    cfg.outputs.report_path = rp->get<std::string>();
  }
  cfg.outputs.demand_window_s = number_at(outputs, "demand_window_s", cfg.outputs.demand_window_s, "outputs.");
  if (!(cfg.outputs.demand_window_s > 0) || !divides(cfg.sim.timestep_s, cfg.outputs.demand_window_s)) {
    invalid("outputs.demand_window_s", "must be a positive multiple of sim.timestep_s");
  }
  cfg.outputs.demand_rate_per_kw = number_at(outputs, "demand_rate_per_kw", cfg.outputs.demand_rate_per_kw, "outputs.");
  if (!(cfg.outputs.demand_rate_per_kw >= 0)) invalid("outputs.demand_rate_per_kw");

  if (auto plan = doc.find("defrost_plan"); plan != doc.end() && !plan->is_null()) {
    if (!plan->is_object()) invalid("defrost_plan");
    cfg.defrost_plan = parse_plan(*plan, cfg);
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigParse, "cannot read " + path.string());
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::ConfigParse, path.string() + ": not a valid document");
  return parse_scenario(doc, path.parent_path());
}

coord::DefrostPlanProblem plan_problem(const ScenarioConfig& cfg) {
  if (!cfg.defrost_plan) throw Error(Errc::ConfigInvalid, "defrost_plan: missing");
  coord::DefrostPlanProblem p;
  p.units = cfg.defrost_plan->units;
  p.background_w = cfg.defrost_plan->background_w;
  p.slot_s = cfg.defrost_plan->slot_s;
  return p;
}

void apply_defrost_plan(ScenarioConfig& cfg, const coord::PlanResult& result) {
  if (!cfg.defrost_plan) return;
  for (const auto& unit : cfg.defrost_plan->units) {
    auto it = result.schedule.find(unit.unit_id);
    if (it == result.schedule.end()) continue;
    for (auto& d : cfg.devices) {
      if (d.id != unit.unit_id) continue;
      d.block["defrost_schedule"] =
          coord::to_defrost_schedule(it->second, cfg.defrost_plan->slot_s, unit.duration_s).to_json();
    }
  }
}

}  // namespace plugsim::sim
