#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace plugsim::cosim {

inline constexpr std::uint16_t kDefaultCosimPort = 9923;
inline constexpr double kTimeTolerance = 1e-6;

std::uint16_t default_cosim_port();  // PLUGSIM_COSIM_PORT or 9923

struct CosimContract {
  std::string sim_id;
  std::vector<std::string> outputs;
  std::vector<std::string> inputs;
  double timestep_s = 60.0;
  std::map<std::string, std::string> output_topic_map;  // variable -> topic
  std::map<std::string, std::string> input_topic_map;   // topic -> variable

  void validate() const;  // throws ConfigInvalid
  nlohmann::json to_json() const;
  static CosimContract from_json(const nlohmann::json& j);

  bool operator==(const CosimContract&) const = default;
};

enum class CosimKind { Hello, HelloAck, Step, Control, End, Fault };

std::string_view to_string(CosimKind kind) noexcept;

struct CosimFrame {
  CosimKind kind = CosimKind::Step;
  double t = 0;
  std::map<std::string, double> values;
  std::optional<CosimContract> contract;
  std::string reason;

  bool operator==(const CosimFrame&) const = default;
};

// One newline-terminated record with keys kind, t, values, contract, reason.
std::string encode_cosim(const CosimFrame& frame);
// Throws MalformedFrame.
CosimFrame decode_cosim(std::string_view line);

CosimFrame make_fault(std::string reason);

}  // namespace plugsim::cosim
