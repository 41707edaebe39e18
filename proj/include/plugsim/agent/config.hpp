#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "plugsim/bus/envelope.hpp"
#include "plugsim/net/socket.hpp"

namespace plugsim::agent {

using Json = nlohmann::json;

enum class InterfaceKind { VirtualDevice, CsvReplay, Cosim, Control, Dr, Historian, Bridge };

std::string_view to_string(InterfaceKind kind) noexcept;
std::optional<InterfaceKind> parse_interface_kind(std::string_view text) noexcept;

inline constexpr double kDefaultHeartbeatS = 5.0;

// Bus port from PLUGSIM_BUS_PORT, else 22916.
std::uint16_t default_bus_port();

struct AgentConfig {
  std::string agent_id;
  net::Endpoint bus_endpoint{"127.0.0.1", default_bus_port()};
  double heartbeat_s = kDefaultHeartbeatS;
  std::optional<std::string> device_endpoint;
  InterfaceKind interface_kind = InterfaceKind::Control;
  std::map<std::string, std::string> point_map;  // point name -> topic
  Json params = Json::object();
};

// Validates and applies defaults. `field_prefix` is prepended to the field
// name reported in ConfigInvalid (e.g. "agents[2].").
AgentConfig load_agent_config(const Json& source, std::string_view field_prefix = {});
AgentConfig load_agent_config_file(const std::filesystem::path& path);

// Heartbeat period rounded to whole milliseconds.
std::int64_t period_ms(double seconds);

}  // namespace plugsim::agent
