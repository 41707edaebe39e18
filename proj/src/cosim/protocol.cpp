#include "plugsim/cosim/protocol.hpp"

#include <cmath>
#include <cstdlib>
#include <set>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"

namespace plugsim::cosim {

using Json = nlohmann::json;

namespace {

constexpr std::pair<CosimKind, std::string_view> kNames[] = {
    {CosimKind::Hello, "HELLO"},     {CosimKind::HelloAck, "HELLO_ACK"}, {CosimKind::Step, "STEP"},
    {CosimKind::Control, "CONTROL"}, {CosimKind::End, "END"},            {CosimKind::Fault, "FAULT"},
};

[[noreturn]] void malformed(std::string why) { throw Error(Errc::MalformedFrame, std::move(why)); }

void check_names(const std::vector<std::string>& names, const char* what) {
  if (names.empty()) throw Error(Errc::ConfigInvalid, std::string(what) + " is empty");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty() || !seen.insert(n).second) {
      throw Error(Errc::ConfigInvalid, std::string(what) + " has an empty or duplicate name");
    }
  }
}

}  // namespace

std::uint16_t default_cosim_port() {
  if (const char* env = std::getenv("PLUGSIM_COSIM_PORT")) {
    long value = std::strtol(env, nullptr, 10);
    if (value > 0 && value < 65536) return static_cast<std::uint16_t>(value);
  }
  return kDefaultCosimPort;
}

std::string_view to_string(CosimKind kind) noexcept {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "?";
}

void CosimContract::validate() const {
  check_names(outputs, "outputs");
  check_names(inputs, "inputs");
  if (!(timestep_s > 0)) throw Error(Errc::ConfigInvalid, "timestep_s");
  for (const auto& [var, topic] : output_topic_map) {
    if (!bus::is_valid_topic(topic)) throw Error(Errc::ConfigInvalid, "output_topic_map." + var);
  }
  for (const auto& [topic, var] : input_topic_map) {
    if (!bus::is_valid_topic(topic)) throw Error(Errc::ConfigInvalid, "input_topic_map." + var);
  }
}

Json CosimContract::to_json() const {
  Json j{{"sim_id", sim_id}, {"outputs", outputs}, {"inputs", inputs}, {"timestep_s", timestep_s}};
  if (!output_topic_map.empty()) j["output_topic_map"] = output_topic_map;
  if (!input_topic_map.empty()) j["input_topic_map"] = input_topic_map;
  return j;
}

CosimContract CosimContract::from_json(const Json& j) {
  if (!j.is_object()) malformed("contract is not an object");
  CosimContract c;
  try {
    c.sim_id = j.value("sim_id", std::string());
    c.outputs = j.at("outputs").get<std::vector<std::string>>();
    c.inputs = j.at("inputs").get<std::vector<std::string>>();
    c.timestep_s = j.at("timestep_s").get<double>();
    c.output_topic_map = j.value("output_topic_map", std::map<std::string, std::string>{});
    c.input_topic_map = j.value("input_topic_map", std::map<std::string, std::string>{});
  } catch (const Json::exception& ex) {
    malformed(std::string("contract: ") + ex.what());
  }
  return c;
}

std::string encode_cosim(const CosimFrame& frame) {
  Json j{{"kind", to_string(frame.kind)}};
  if (frame.kind == CosimKind::Step || frame.kind == CosimKind::Control) {
    j["t"] = frame.t;
    j["values"] = frame.values;
  }
  if (frame.contract) j["contract"] = frame.contract->to_json();
  if (!frame.reason.empty() || frame.kind == CosimKind::Fault) j["reason"] = frame.reason;
  return j.dump() + "\n";
}

CosimFrame decode_cosim(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  Json j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) malformed("not a record");
  auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) malformed("missing kind");
  CosimFrame f;
  bool known = false;
  for (const auto& [k, name] : kNames) {
    if (name == kind->get<std::string>()) {
      f.kind = k;
      known = true;
    }
  }
  if (!known) malformed("unknown kind " + kind->dump());
  if (f.kind == CosimKind::Step || f.kind == CosimKind::Control) {
    auto t = j.find("t");
    if (t == j.end() || !t->is_number() || !std::isfinite(t->get<double>())) malformed("missing t");
    f.t = t->get<double>();
    auto values = j.find("values");
    if (values == j.end() || !values->is_object()) malformed("missing values");
    for (const auto& [name, v] : values->items()) {
      if (!v.is_number()) malformed("value '" + name + "' is not a number");
      f.values.emplace(name, v.get<double>());
    }
  }
  if (auto c = j.find("contract"); c != j.end()) f.contract = CosimContract::from_json(*c);
  if (f.kind == CosimKind::Hello && !f.contract) malformed("HELLO without contract");
  if (auto r = j.find("reason"); r != j.end() && r->is_string()) f.reason = r->get<std::string>();
  return f;
}

CosimFrame make_fault(std::string reason) {
  CosimFrame f;
  f.kind = CosimKind::Fault;
  f.reason = std::move(reason);
  return f;
}

}  // namespace plugsim::cosim
