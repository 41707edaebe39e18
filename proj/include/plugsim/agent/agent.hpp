#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "plugsim/agent/bus_client.hpp"
#include "plugsim/agent/clock.hpp"
#include "plugsim/agent/config.hpp"
#include "plugsim/agent/log.hpp"

namespace plugsim::agent {

using Handler = std::function<void(const bus::MessageEnvelope&)>;
using Action = std::function<void()>;

struct CallbackBinding {
  std::string pattern;
  std::string name;
  Handler handler;
};

struct HeartbeatBinding {
  std::int64_t period_ms = 0;
  std::string name;
  Action action;
  std::int64_t next_due_ms = 0;  // real-time scheduling only
  std::uint64_t firings = 0;
};

inline constexpr std::size_t kTickMessageGuard = 10000;

// Base for every bus-resident program. Handlers and heartbeat actions of
// one agent never run concurrently with each other.
class Agent {
 public:
  explicit Agent(AgentConfig cfg);
  virtual ~Agent();
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  const AgentConfig& config() const noexcept { return cfg_; }
  const std::string& id() const noexcept { return cfg_.agent_id; }

  // Registration; bindings added after start() are subscribed immediately.
  void bind(std::string pattern, Handler handler, std::string name = {});
  void unbind(const std::string& pattern);
  void every(double period_s, Action action, std::string name = {});

  // Opens the bus connection, subscribes every binding and waits until the
  // broker has applied the subscriptions. Throws Error(BusUnreachable).
  void start(std::shared_ptr<const Clock> clock, RetryPolicy retry = {});
  void stop();
  bool started() const noexcept { return client_ != nullptr; }

  // Throws Error(InvalidTopic) without sending anything.
  PublishStatus publish(std::string_view topic, Json payload, bus::Headers headers = {});
  PublishStatus publish_at(std::int64_t ts_ms, std::string_view topic, Json payload,
                           bus::Headers headers = {});

  // Sim time inside a heartbeat is the scheduled firing time.
  std::int64_t now_ms() const;

  // Lockstep step: drain deliveries, fire heartbeats due at `t_ms`, drain
  // again. Throws Error(TickOverflow) past kTickMessageGuard deliveries.
  void tick(std::int64_t t_ms);
  // Sync and dispatch until no delivery is pending.
  std::size_t drain();

  // Free-running loop. Heartbeats fire from the clock reading at entry or,
  // given `start_ms`, at the multiples of their period from `start_ms` on.
  // With `end_ms`, no heartbeat at or after it fires.
  void run_realtime(std::stop_token stop, std::optional<std::int64_t> end_ms = std::nullopt,
                    std::optional<std::int64_t> start_ms = std::nullopt);

  AgentLog& log() noexcept { return log_; }
  void log(LogLevel level, std::string_view message);
  BusClient* client() noexcept { return client_.get(); }
  std::uint64_t heartbeat_firings(std::size_t index = 0) const;
  std::uint64_t handled_messages() const noexcept { return handled_; }

 protected:
  // Hook run once after the connection is up, before subscribing.
  virtual void on_start() {}
  virtual void on_stop() {}
  // Runs once per delivery, before the matching bindings.
  virtual void on_delivery(const bus::MessageEnvelope&) {}

 private:
  void dispatch(const bus::MessageEnvelope& msg);
  std::size_t drain_pending();
  void fire(HeartbeatBinding& hb, std::int64_t t_ms);

  AgentConfig cfg_;
  AgentLog log_;
  std::shared_ptr<const Clock> clock_;
  std::unique_ptr<BusClient> client_;
  std::vector<CallbackBinding> bindings_;
  std::vector<HeartbeatBinding> heartbeats_;
  std::recursive_mutex exec_mu_;
  std::optional<std::int64_t> current_time_;
  std::uint64_t handled_ = 0;
  std::map<std::string, std::size_t> tick_topics_;
  std::size_t tick_handled_ = 0;
};

}  // namespace plugsim::agent
