#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "plugsim/agent/agent.hpp"
#include "plugsim/ingest/csv.hpp"
#include "plugsim/ingest/device.hpp"

namespace plugsim::ingest {

struct DriverBinding {
  std::map<std::string, std::string> reads;   // point -> topic
  std::map<std::string, std::string> writes;  // topic -> point

  void validate() const;  // throws ConfigInvalid
};

// reads/writes under `devices/<building>/<id>/<point>`; `reads` limits the
// published points (all readable points when empty).
DriverBinding default_binding(const VirtualDevice& device, std::string_view building,
                              const std::vector<std::string>& reads = {});

// Steps the device over [t, t + dt) and returns one record per read point,
// all stamped `t_ms`.
std::vector<PointRecord> driver_poll(VirtualDevice& device, const DriverBinding& binding,
                                     std::int64_t t_ms, double dt_s);

// Throws UnknownPoint or ValueOutOfRange.
void driver_actuate(VirtualDevice& device, const DriverBinding& binding,
                    const bus::MessageEnvelope& env);

class DriverAgent : public agent::Agent {
 public:
  DriverAgent(agent::AgentConfig cfg, VirtualDevice device, DriverBinding binding);

  const VirtualDevice& device() const noexcept { return device_; }
  const DriverBinding& binding() const noexcept { return binding_; }
  std::uint64_t polls() const noexcept { return polls_; }

 private:
  void poll();
  void actuate(const bus::MessageEnvelope& env);

  VirtualDevice device_;
  DriverBinding binding_;
  std::uint64_t polls_ = 0;
};

// Records numeric payloads of matching deliveries as `ts_ms,topic,value`.
class HistorianAgent : public agent::Agent {
 public:
  static constexpr std::size_t kFlushRows = 100;
  static constexpr std::chrono::seconds kFlushInterval{5};

  // params: {"patterns": [...], "out": path}
  explicit HistorianAgent(agent::AgentConfig cfg);

  std::size_t rows() const noexcept { return writer_ ? writer_->rows_written() : 0; }
  std::size_t skipped() const noexcept { return skipped_; }
  bool failed() const noexcept { return failed_; }
  const std::filesystem::path& path() const noexcept { return path_; }
  void flush();

 protected:
  void on_stop() override;

 private:
  void record(const bus::MessageEnvelope& msg);

  std::filesystem::path path_;
  std::unique_ptr<PointCsvWriter> writer_;
  std::size_t skipped_ = 0;
  bool failed_ = false;
  std::chrono::steady_clock::time_point last_flush_;
};

// Publishes rows of a point CSV on its heartbeat: each firing at t sends
// the rows with ts_ms in (previous firing, t].
class ReplayAgent : public agent::Agent {
 public:
  // params: {"path": file, "topic_prefix": optional}
  explicit ReplayAgent(agent::AgentConfig cfg);
  ReplayAgent(agent::AgentConfig cfg, std::vector<PointRecord> rows, std::string topic_prefix = {});

  std::size_t published() const noexcept { return next_; }
  bool finished() const noexcept { return next_ >= rows_.size(); }

 private:
  void emit();

  std::vector<PointRecord> rows_;
  std::string prefix_;
  std::size_t next_ = 0;
};

std::string prefixed_topic(std::string_view prefix, std::string_view topic);

// Wall-paced replay over an existing connection: row i goes out at
// (ts_i - ts_0) / speedup after the start. Returns rows published.
std::size_t csv_replay(agent::BusClient& client, const std::vector<PointRecord>& rows, double speedup,
                       std::string_view topic_prefix, std::stop_token stop = {});

}  // namespace plugsim::ingest
