#include "plugsim/ingest/device.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "plugsim/error.hpp"

namespace plugsim::ingest {

using Json = nlohmann::json;

std::string_view to_string(DeviceKind kind) noexcept {
  switch (kind) {
    case DeviceKind::Refrigerator: return "refrigerator";
    case DeviceKind::WaterHeater: return "water_heater";
    case DeviceKind::EvCharger: return "ev_charger";
    case DeviceKind::Pv: return "pv";
    case DeviceKind::Load: return "load";
  }
  return "?";
}

DeviceKind parse_device_kind(std::string_view text) {
  for (auto k : {DeviceKind::Refrigerator, DeviceKind::WaterHeater, DeviceKind::EvCharger,
                 DeviceKind::Pv, DeviceKind::Load}) {
    if (to_string(k) == text) return k;
  }
  throw Error(Errc::ConfigInvalid, "kind '" + std::string(text) + "'");
}

std::string normalize_point_name(std::string_view name) {
  std::string out;
  bool pending_sep = false;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (pending_sep && !out.empty()) out += '_';
      pending_sep = false;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      pending_sep = true;
    }
  }
  return out;
}

namespace {

// 0/1 flag from a number or boolean payload.
bool parse_flag(const Json& value, const std::string& point) {
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number()) {
    double v = value.get<double>();
    if (v == 0.0) return false;
    if (v == 1.0) return true;
  }
  throw Error(Errc::ValueOutOfRange, point + " expects 0 or 1");
}

}  // namespace

VirtualDevice::VirtualDevice(std::string id, Model model) : id_(std::move(id)), model_(std::move(model)) {
  refresh_static_readings();
}

VirtualDevice VirtualDevice::from_json(const Json& block) {
  auto id = block.value("id", std::string());
  if (id.empty()) throw Error(Errc::ConfigInvalid, "id");
  const auto kind = parse_device_kind(block.value("kind", std::string()));
  const Json params = block.value("params", Json::object());
  const Json initial = block.value("initial", Json::object());

  switch (kind) {
    case DeviceKind::Refrigerator: {
      RefrigeratorUnit unit;
      unit.state.params = models::RefrigeratorParams::from_json(params);
      unit.state.cabinet_c = initial.value("T_cab", 0.5 * (unit.state.params.t_low_c + unit.state.params.t_high_c));
      unit.state.compressor_on = initial.value("compressor_on", false);
      if (auto it = block.find("defrost_schedule"); it != block.end()) {
        unit.schedule = models::DefrostSchedule::from_json(*it);
      }
      return {id, unit};
    }
    case DeviceKind::WaterHeater: {
      models::WaterHeaterState s;
      s.params = models::WaterHeaterParams::from_json(params);
      s.tank_c = initial.value("T_tank", 0.5 * (s.params.t_low_c + s.params.t_high_c));
      s.enabled = initial.value("enabled", true);
      return {id, s};
    }
    case DeviceKind::EvCharger: {
      models::EvChargerState s;
      s.params = models::EvChargerParams::from_json(params);
      s.plugged = initial.value("plugged", false);
      s.enabled = initial.value("enabled", true);
      s.soc_kwh = initial.value("soc_kwh", 0.0);
      if (s.soc_kwh < 0 || s.soc_kwh > s.params.capacity_kwh) throw Error(Errc::ConfigInvalid, "initial.soc_kwh");
      return {id, s};
    }
    case DeviceKind::Pv: {
      models::PvState s;
      s.capacity_w = params.value("capacity_w", s.capacity_w);
      if (params.contains("profile_csv")) {
        s.irradiance = models::TimeProfile::from_csv(params["profile_csv"].get<std::string>());
      } else if (params.contains("profile")) {
        s.irradiance = models::TimeProfile::from_json(params["profile"]);
      }
      s.irradiance.repeat_daily = params.value("repeat_daily", s.irradiance.repeat_daily);
      s.irradiance.validate(0.0, 1.0);
      return {id, s};
    }
    case DeviceKind::Load: {
      models::LoadProfileState s;
      if (params.contains("profile_csv")) {
        s.watts = models::TimeProfile::from_csv(params["profile_csv"].get<std::string>());
      } else if (params.contains("profile")) {
        s.watts = models::TimeProfile::from_json(params["profile"]);
      }
      s.watts.repeat_daily = params.value("repeat_daily", s.watts.repeat_daily);
      s.watts.validate(0.0, 1e12);
      return {id, s};
    }
  }
  throw Error(Errc::ConfigInvalid, "kind");
}

DeviceKind VirtualDevice::kind() const noexcept { return static_cast<DeviceKind>(model_.index()); }

void VirtualDevice::refresh_static_readings() {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RefrigeratorUnit>) {
          readings_["t_cab"] = m.state.cabinet_c;
          readings_["mode"] = static_cast<double>(m.state.mode);
          readings_["compressor"] = m.state.compressor_on ? 1.0 : 0.0;
          readings_.try_emplace("power", 0.0);
          readings_.try_emplace("heater_power", 0.0);
        } else if constexpr (std::is_same_v<T, models::WaterHeaterState>) {
          readings_["t_tank"] = m.tank_c;
          readings_["element"] = m.element_on ? 1.0 : 0.0;
          readings_["enabled"] = m.enabled ? 1.0 : 0.0;
          readings_.try_emplace("power", 0.0);
        } else if constexpr (std::is_same_v<T, models::EvChargerState>) {
          readings_["soc_kwh"] = m.soc_kwh;
          readings_["plugged"] = m.plugged ? 1.0 : 0.0;
          readings_["enabled"] = m.enabled ? 1.0 : 0.0;
          readings_.try_emplace("power", 0.0);
        } else {
          readings_.try_emplace("power", 0.0);
        }
      },
      model_);
}

void VirtualDevice::step(double t_s, double dt_s) {
  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RefrigeratorUnit>) {
          const double t_cab = m.state.cabinet_c;
          auto r = models::step_refrigerator(m.state, t_s, dt_s, m.schedule);
          m.state = r.state;
          readings_["power"] = r.power_w;
          readings_["heater_power"] = r.heater_w;
          readings_["t_cab"] = t_cab;
          readings_["mode"] = static_cast<double>(m.state.mode);
          readings_["compressor"] = m.state.compressor_on ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, models::WaterHeaterState>) {
          const double t_tank = m.tank_c;
          auto r = models::step_water_heater(m, t_s, dt_s);
          m = r.state;
          readings_["power"] = r.power_w;
          readings_["t_tank"] = t_tank;
          readings_["element"] = m.element_on ? 1.0 : 0.0;
          readings_["enabled"] = m.enabled ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, models::EvChargerState>) {
          auto r = models::step_ev_charger(m, t_s, dt_s);
          m = r.state;
          readings_["power"] = r.power_w;
          readings_["soc_kwh"] = m.soc_kwh;
          readings_["plugged"] = m.plugged ? 1.0 : 0.0;
          readings_["enabled"] = m.enabled ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, models::PvState>) {
          readings_["power"] = models::step_pv(m, t_s, dt_s);
        } else {
          readings_["power"] = models::step_load(m, t_s, dt_s);
        }
      },
      model_);
}

std::vector<std::string> VirtualDevice::readable_points() const {
  std::vector<std::string> out;
  for (const auto& [name, value] : readings_) out.push_back(name);
  return out;
}

std::vector<std::string> VirtualDevice::writable_points() const {
  switch (kind()) {
    case DeviceKind::Refrigerator: return {"defrost_schedule"};
    case DeviceKind::WaterHeater: return {"enabled"};
    case DeviceKind::EvCharger: return {"enabled", "plugged"};
    default: return {};
  }
}

std::string VirtualDevice::unit_of(std::string_view point) {
  if (point == "power" || point == "heater_power") return "W";
  if (point == "t_cab" || point == "t_tank") return "degC";
  if (point == "soc_kwh") return "kWh";
  if (point == "mode") return "mode";
  return "status";
}

void VirtualDevice::apply(const std::string& point, const Json& value) {
  const auto writable = writable_points();
  if (std::find(writable.begin(), writable.end(), point) == writable.end()) {
    throw Error(Errc::UnknownPoint, id_ + "/" + point);
  }
  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RefrigeratorUnit>) {
          try {
            m.schedule = models::DefrostSchedule::from_json(value);
          } catch (const Error& err) {
            throw Error(Errc::ValueOutOfRange, "defrost_schedule: " + err.detail());
          } catch (const std::exception& ex) {
            throw Error(Errc::ValueOutOfRange, std::string("defrost_schedule: ") + ex.what());
          }
        } else if constexpr (std::is_same_v<T, models::WaterHeaterState>) {
          m.enabled = parse_flag(value, point);
        } else if constexpr (std::is_same_v<T, models::EvChargerState>) {
          bool flag = parse_flag(value, point);
          if (point == "plugged") {
            m.plugged = flag;
          } else {
            m.enabled = flag;
          }
        }
      },
      model_);
  refresh_static_readings();
}

}  // namespace plugsim::ingest
