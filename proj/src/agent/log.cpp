#include "plugsim/agent/log.hpp"

namespace plugsim::agent {

std::string_view to_string(LogLevel level) noexcept {
  switch (level) {
    case LogLevel::Debug: return "DEBUG";
    case LogLevel::Info: return "INFO";
    case LogLevel::Warn: return "WARN";
    case LogLevel::Error: return "ERROR";
  }
  return "?";
}

std::string format_log_line(std::int64_t ts_ms, LogLevel level, std::string_view agent_id,
                            std::string_view message) {
  std::string line = std::to_string(ts_ms);
  line += ' ';
  line += to_string(level);
  line += ' ';
  line += agent_id;
  line += ' ';
  line += message;
  return line;
}

void LogSink::set_stream(std::ostream* out, LogLevel min_level) {
  std::lock_guard lk(mu_);
  out_ = out;
  min_level_ = min_level;
}

void LogSink::write(std::int64_t ts_ms, LogLevel level, std::string_view agent_id,
                    std::string_view message) {
  std::lock_guard lk(mu_);
  if (out_ == nullptr || level < min_level_) return;
  *out_ << format_log_line(ts_ms, level, agent_id, message) << '\n';
}

LogSink& log_sink() {
  static LogSink sink;
  return sink;
}

void AgentLog::log(std::int64_t ts_ms, LogLevel level, std::string_view message) {
  log_sink().write(ts_ms, level, agent_id_, message);
  if (level < LogLevel::Warn) return;
  std::lock_guard lk(mu_);
  if (level == LogLevel::Error) ++errors_;
  if (kept_.size() < 10000) kept_.push_back(format_log_line(ts_ms, level, agent_id_, message));
}

std::size_t AgentLog::error_count() const {
  std::lock_guard lk(mu_);
  return errors_;
}

std::vector<std::string> AgentLog::lines() const {
  std::lock_guard lk(mu_);
  return kept_;
}

}  // namespace plugsim::agent
