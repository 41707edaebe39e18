#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <thread>

#include "plugsim/net/socket.hpp"

namespace plugsim::bus {

inline constexpr std::uint16_t kDefaultBusPort = 22916;

struct BrokerLimits {
  std::size_t max_frame_bytes = 1u << 20;
  std::size_t max_connections = 4096;
  // A subscriber whose unsent backlog exceeds this is disconnected.
  std::size_t max_outbound_bytes = 256u << 20;
};

struct BrokerStats {
  std::uint64_t connections_accepted = 0;
  std::uint64_t frames_in = 0;
  std::uint64_t publishes = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t errors_sent = 0;
  std::map<std::string, std::uint64_t> publishes_by_prefix;  // first topic segment
};

// Single-threaded poll(2) loop. Frames of one connection are handled in
// arrival order and each PUB is routed against the subscription table as
// it stands when the frame is processed.
class Broker {
 public:
  // Binds immediately; port 0 picks an ephemeral port. Throws AddressInUse.
  explicit Broker(std::uint16_t port, BrokerLimits limits = {},
                  std::string bind_host = "127.0.0.1");
  ~Broker();
  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  net::Endpoint endpoint() const { return {"127.0.0.1", port_}; }

  // Blocks until stop().
  void run();
  // run() on a background thread.
  void start();
  // Idempotent; closes every connection.
  void stop();

  BrokerStats stats() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
  std::thread thread_;
};

}  // namespace plugsim::bus
