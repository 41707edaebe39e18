#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "plugsim/bus/envelope.hpp"

namespace plugsim::hmi {

class BridgeAgent;
class WsSession;

struct HttpOptions {
  std::string bind = "127.0.0.1";
  std::uint16_t port = 0;
  bool cors = true;
  std::chrono::milliseconds ping_interval{15000};
  std::size_t queue_limit = 1000;
  int threads = 2;
};

class HttpServer {
 public:
  HttpServer(BridgeAgent& owner, HttpOptions options);  // throws AddressInUse
  ~HttpServer();

  std::uint16_t port() const noexcept { return port_; }
  const HttpOptions& options() const noexcept { return options_; }
  BridgeAgent& owner() noexcept { return owner_; }

  // Fans one delivery out to every stream session; callable from any thread.
  void broadcast(const bus::MessageEnvelope& msg);
  void stop();

  std::size_t sessions() const;
  std::uint64_t dropped() const noexcept { return dropped_.load(); }
  void add_dropped(std::uint64_t n) noexcept { dropped_ += n; }
  bool stopping() const noexcept { return stopping_.load(); }

  void register_session(const std::shared_ptr<WsSession>& s);
  void unregister_session(const WsSession* s);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  BridgeAgent& owner_;
  HttpOptions options_;
  std::uint16_t port_ = 0;
  std::atomic<std::uint64_t> dropped_{0};
  std::atomic<bool> stopping_{false};
  mutable std::mutex mu_;
  std::vector<std::weak_ptr<WsSession>> sessions_;
};

}  // namespace plugsim::hmi
