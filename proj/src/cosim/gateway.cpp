#include "plugsim/cosim/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"

namespace plugsim::cosim {

using agent::LogLevel;
using Json = nlohmann::json;

void GatewayConfig::validate() const {
  if (output_topic_map.empty()) throw Error(Errc::ConfigInvalid, "output_topic_map");
  for (const auto& [var, topic] : output_topic_map) {
    if (!bus::is_valid_topic(topic)) throw Error(Errc::ConfigInvalid, "output_topic_map." + var);
  }
  for (const auto& [topic, var] : input_topic_map) {
    if (!bus::is_valid_topic(topic)) throw Error(Errc::ConfigInvalid, "input_topic_map." + topic);
  }
  if (timestep_s && !(*timestep_s > 0)) throw Error(Errc::ConfigInvalid, "timestep_s");
}

GatewayConfig GatewayConfig::from_json(const Json& params) {
  GatewayConfig cfg;
  try {
    cfg.sim_id = params.value("sim_id", std::string());
    cfg.output_topic_map = params.value("output_topic_map", std::map<std::string, std::string>{});
    cfg.input_topic_map = params.value("input_topic_map", std::map<std::string, std::string>{});
    cfg.input_defaults = params.value("input_defaults", std::map<std::string, double>{});
    if (params.contains("timestep_s")) cfg.timestep_s = params["timestep_s"].get<double>();
  } catch (const Json::exception& ex) {
    throw Error(Errc::ConfigInvalid, std::string("cosim params: ") + ex.what());
  }
  cfg.validate();
  return cfg;
}

GatewaySession::Outcome GatewaySession::fault(std::string reason) {
  Outcome out;
  out.reply = make_fault(std::move(reason));
  out.finished = true;
  out.faulted = true;
  return out;
}

GatewaySession::Outcome GatewaySession::on_frame(const CosimFrame& frame,
                                                 const std::map<std::string, double>& latest) {
  switch (frame.kind) {
    case CosimKind::Hello: {
      if (contract_) return fault("duplicate HELLO");
      const auto& c = *frame.contract;
      try {
        c.validate();
      } catch (const Error& err) {
        return fault("invalid contract: " + err.detail());
      }
      if (!cfg_.sim_id.empty() && c.sim_id != cfg_.sim_id) return fault("unknown sim_id");
      for (const auto& name : c.outputs) {
        if (!cfg_.output_topic_map.count(name)) return fault("unknown output");
      }
      std::set<std::string> known_inputs;
      for (const auto& [topic, var] : cfg_.input_topic_map) known_inputs.insert(var);
      for (const auto& name : c.inputs) {
        if (!known_inputs.count(name)) return fault("unknown input");
      }
      if (cfg_.timestep_s && std::abs(*cfg_.timestep_s - c.timestep_s) > kTimeTolerance) {
        return fault("timestep mismatch");
      }
      contract_ = c;
      Outcome out;
      CosimFrame ack;
      ack.kind = CosimKind::HelloAck;
      out.reply = ack;
      return out;
    }
    case CosimKind::Step: {
      if (!contract_) return fault("STEP before HELLO");
      for (const auto& [name, v] : frame.values) {
        if (std::find(contract_->outputs.begin(), contract_->outputs.end(), name) == contract_->outputs.end()) {
          return fault("unknown output");
        }
      }
      if (last_t_ && std::abs(frame.t - (*last_t_ + contract_->timestep_s)) > kTimeTolerance) {
        return fault("out-of-order t");
      }
      last_t_ = frame.t;
      ++steps_;
      Outcome out;
      for (const auto& [name, v] : frame.values) out.publishes.emplace_back(cfg_.output_topic_map.at(name), v);
      CosimFrame control;
      control.kind = CosimKind::Control;
      control.t = frame.t;
      for (const auto& name : contract_->inputs) {
        double value = 0.0;
        if (auto it = latest.find(name); it != latest.end()) {
          value = it->second;
        } else if (auto d = cfg_.input_defaults.find(name); d != cfg_.input_defaults.end()) {
          value = d->second;
        }
        control.values.emplace(name, value);
      }
      ++controls_;
      out.reply = control;
      return out;
    }
    case CosimKind::End: {
      Outcome out;
      out.finished = true;
      return out;
    }
    default:
      return fault(std::string("unexpected ") + std::string(to_string(frame.kind)));
  }
}

GatewayAgent::GatewayAgent(agent::AgentConfig cfg) : Agent(std::move(cfg)) {
  const auto& params = config().params;
  gw_ = GatewayConfig::from_json(params);
  lockstep_ = params.value("lockstep", true);
  accept_timeout_ = std::chrono::milliseconds(
      static_cast<std::int64_t>(params.value("accept_timeout_s", 10.0) * 1000.0));
  auto port = params.value("port", static_cast<int>(default_cosim_port()));
  listener_ = net::listen_tcp(params.value("bind", std::string("127.0.0.1")), static_cast<std::uint16_t>(port));
  port_ = net::local_port(listener_);

  for (const auto& [topic, var] : gw_.input_topic_map) {
    bind(topic,
         [this, var = var](const bus::MessageEnvelope& msg) {
           if (!msg.payload.is_number()) return;
           std::lock_guard lk(mu_);
           latest_[var] = msg.payload.get<double>();
         },
         "input:" + var);
  }
  if (lockstep_) every(config().heartbeat_s, [this] { lockstep_step(); }, "cosim-step");
}

GatewayAgent::~GatewayAgent() {
  if (protocol_thread_.joinable()) {
    protocol_thread_.request_stop();
    conn_.shutdown();
    protocol_thread_.join();
  }
}

void GatewayAgent::on_start() {
  if (!lockstep_) {
    protocol_thread_ = std::jthread([this](std::stop_token st) { serve_loop(st); });
  }
}

void GatewayAgent::on_stop() {
  if (protocol_thread_.joinable()) {
    protocol_thread_.request_stop();
    conn_.shutdown();
    protocol_thread_.join();
  }
  conn_.close();
}

std::map<std::string, double> GatewayAgent::latest_snapshot() {
  std::lock_guard lk(mu_);
  return latest_;
}

std::uint64_t GatewayAgent::steps() const {
  std::lock_guard lk(mu_);
  return session_ ? session_->steps() : 0;
}

std::uint64_t GatewayAgent::controls() const {
  std::lock_guard lk(mu_);
  return session_ ? session_->controls() : 0;
}

std::optional<std::string> GatewayAgent::fault() const {
  std::lock_guard lk(mu_);
  return fault_;
}

bool GatewayAgent::open_session(std::chrono::milliseconds timeout) {
  auto fd = net::accept_with_timeout(listener_, timeout);
  if (!fd) return false;
  conn_ = net::LineSocket(std::move(fd), 1u << 20);
  connected_ = true;
  std::lock_guard lk(mu_);
  session_.emplace(gw_);
  return true;
}

bool GatewayAgent::serve_one() {
  std::optional<std::string> line;
  CosimFrame frame;
  GatewaySession::Outcome outcome;
  try {
    line = conn_.read_line();
    if (!line) {
      connected_ = false;
      return false;
    }
    frame = decode_cosim(*line);
  } catch (const Error& err) {
    outcome.reply = make_fault("malformed frame: " + err.detail());
    outcome.finished = outcome.faulted = true;
  }
  if (!outcome.reply) {
    auto latest = latest_snapshot();
    std::lock_guard lk(mu_);
    outcome = session_->on_frame(frame, latest);
  }
  for (const auto& [topic, value] : outcome.publishes) {
    const auto& contract = session_->contract();
    publish(topic, value, {{"sim_id", contract ? contract->sim_id : std::string()}, {"t", Json(frame.t).dump()}});
    ++published_;
  }
  if (outcome.reply) conn_.write(encode_cosim(*outcome.reply));
  if (outcome.faulted) {
    std::lock_guard lk(mu_);
    fault_ = outcome.reply->reason;
    log(LogLevel::Error, "cosim fault: " + outcome.reply->reason);
  }
  if (outcome.finished) {
    conn_.close();
    connected_ = false;
    return false;
  }
  return true;
}

void GatewayAgent::lockstep_step() {
  if (finished_) return;
  if (!connected_) {
    if (!open_session(accept_timeout_)) {
      log(LogLevel::Error, "no simulator connected on port " + std::to_string(port_));
      return;
    }
  }
  // Consume frames until one STEP has been answered (HELLO comes first).
  while (true) {
    auto before = steps();
    if (!serve_one()) {
      finished_ = true;
      return;
    }
    if (steps() > before) return;
  }
}

void GatewayAgent::serve_loop(std::stop_token stop) {
  while (!stop.stop_requested()) {
    if (!open_session(std::chrono::milliseconds(200))) continue;
    while (!stop.stop_requested() && serve_one()) {
    }
    finished_ = true;
  }
}

}  // namespace plugsim::cosim
