#pragma once

#include <cstdint>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace plugsim::agent {

enum class LogLevel { Debug, Info, Warn, Error };

std::string_view to_string(LogLevel level) noexcept;

// Shared line sink: `ts_ms level agent_id message`.
class LogSink {
 public:
  void set_stream(std::ostream* out, LogLevel min_level = LogLevel::Warn);
  void write(std::int64_t ts_ms, LogLevel level, std::string_view agent_id,
             std::string_view message);

 private:
  std::mutex mu_;
  std::ostream* out_ = nullptr;
  LogLevel min_level_ = LogLevel::Warn;
};

LogSink& log_sink();

std::string format_log_line(std::int64_t ts_ms, LogLevel level, std::string_view agent_id,
                            std::string_view message);

// Per-agent log; keeps warnings and errors for inspection after a run.
class AgentLog {
 public:
  explicit AgentLog(std::string agent_id) : agent_id_(std::move(agent_id)) {}

  void log(std::int64_t ts_ms, LogLevel level, std::string_view message);
  std::size_t error_count() const;
  std::vector<std::string> lines() const;

 private:
  std::string agent_id_;
  mutable std::mutex mu_;
  std::vector<std::string> kept_;
  std::size_t errors_ = 0;
};

}  // namespace plugsim::agent
