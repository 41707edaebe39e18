#include "plugsim/agent/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"

namespace plugsim::agent {

namespace {

constexpr std::pair<InterfaceKind, std::string_view> kKinds[] = {
    {InterfaceKind::VirtualDevice, "virtual-device"},
    {InterfaceKind::CsvReplay, "csv-replay"},
    {InterfaceKind::Cosim, "cosim"},
    {InterfaceKind::Control, "control"},
    {InterfaceKind::Dr, "dr"},
    {InterfaceKind::Historian, "historian"},
    {InterfaceKind::Bridge, "bridge"},
};

[[noreturn]] void invalid(std::string_view prefix, std::string_view field) {
  throw Error(Errc::ConfigInvalid, std::string(prefix) + std::string(field));
}

}  // namespace

std::string_view to_string(InterfaceKind kind) noexcept {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<InterfaceKind> parse_interface_kind(std::string_view text) noexcept {
  for (const auto& [k, name] : kKinds) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::uint16_t default_bus_port() {
  if (const char* env = std::getenv("PLUGSIM_BUS_PORT")) {
    char* end = nullptr;
    long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0 && value < 65536) {
      return static_cast<std::uint16_t>(value);
    }
  }
  return 22916;
}

std::int64_t period_ms(double seconds) { return std::llround(seconds * 1000.0); }

AgentConfig load_agent_config(const Json& src, std::string_view prefix) {
  if (!src.is_object()) throw Error(Errc::ConfigParse, std::string(prefix) + "agent config is not an object");
  AgentConfig cfg;

  auto id = src.find("agent_id");
  if (id == src.end() || !id->is_string() || id->get<std::string>().empty()) invalid(prefix, "agent_id");
  cfg.agent_id = id->get<std::string>();

  auto kind = src.find("interface_kind");
  if (kind == src.end() || !kind->is_string()) invalid(prefix, "interface_kind");
  auto parsed = parse_interface_kind(kind->get<std::string>());
  if (!parsed) invalid(prefix, "interface_kind");
  cfg.interface_kind = *parsed;

  if (auto hb = src.find("heartbeat_s"); hb != src.end()) {
    if (!hb->is_number() || !(hb->get<double>() > 0) || period_ms(hb->get<double>()) <= 0) {
      invalid(prefix, "heartbeat_s");
    }
    cfg.heartbeat_s = hb->get<double>();
  }

  if (auto ep = src.find("bus_endpoint"); ep != src.end()) {
    if (!ep->is_string()) invalid(prefix, "bus_endpoint");
    try {
      cfg.bus_endpoint = net::parse_endpoint(ep->get<std::string>(), default_bus_port());
    } catch (const Error&) {
      invalid(prefix, "bus_endpoint");
    }
  }

  if (auto dev = src.find("device_endpoint"); dev != src.end() && !dev->is_null()) {
    if (!dev->is_string()) invalid(prefix, "device_endpoint");
    cfg.device_endpoint = dev->get<std::string>();
  }

  if (auto pm = src.find("point_map"); pm != src.end()) {
    if (!pm->is_object()) invalid(prefix, "point_map");
    for (const auto& [point, topic] : pm->items()) {
      if (!topic.is_string() || !bus::is_valid_topic(topic.get<std::string>())) {
        invalid(prefix, "point_map." + point);
      }
      cfg.point_map.emplace(point, topic.get<std::string>());
    }
  }

  if (auto params = src.find("params"); params != src.end()) {
    if (!params->is_object()) invalid(prefix, "params");
    cfg.params = *params;
  }
  return cfg;
}

AgentConfig load_agent_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigParse, "cannot read " + path.string());
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::ConfigParse, path.string() + ": not a valid document");
  return load_agent_config(doc);
}

}  // namespace plugsim::agent
