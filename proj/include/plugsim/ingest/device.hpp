#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "plugsim/models/devices.hpp"
#include "plugsim/models/refrigerator.hpp"

namespace plugsim::ingest {

enum class DeviceKind { Refrigerator, WaterHeater, EvCharger, Pv, Load };

std::string_view to_string(DeviceKind kind) noexcept;
DeviceKind parse_device_kind(std::string_view text);  // throws ConfigInvalid

// "Space Temperature" -> "space_temperature"
std::string normalize_point_name(std::string_view name);

struct RefrigeratorUnit {
  models::RefrigeratorState state;
  models::DefrostSchedule schedule;
};

// One emulated asset with named numeric points. `step` advances [t, t+dt)
// and refreshes the readings for that interval.
class VirtualDevice {
 public:
  using Model = std::variant<RefrigeratorUnit, models::WaterHeaterState, models::EvChargerState,
                             models::PvState, models::LoadProfileState>;

  VirtualDevice(std::string id, Model model);

  // Device block: {"kind", "id", "params", "initial", "defrost_schedule"}.
  static VirtualDevice from_json(const nlohmann::json& block);

  const std::string& id() const noexcept { return id_; }
  DeviceKind kind() const noexcept;
  const Model& model() const noexcept { return model_; }

  void step(double t_s, double dt_s);
  const std::map<std::string, double>& readings() const noexcept { return readings_; }

  std::vector<std::string> readable_points() const;
  std::vector<std::string> writable_points() const;
  static std::string unit_of(std::string_view point);

  // Throws UnknownPoint or ValueOutOfRange; state is untouched on error.
  void apply(const std::string& point, const nlohmann::json& value);

 private:
  void refresh_static_readings();

  std::string id_;
  Model model_;
  std::map<std::string, double> readings_;
};

}  // namespace plugsim::ingest
