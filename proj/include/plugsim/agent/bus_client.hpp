#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "plugsim/bus/envelope.hpp"
#include "plugsim/net/socket.hpp"

namespace plugsim::agent {

struct RetryPolicy {
  std::chrono::milliseconds initial{500};
  std::chrono::milliseconds cap{8000};
  int max_attempts = 8;

  std::chrono::milliseconds delay(int attempt) const;
};

enum class PublishStatus { Sent, Buffered };

inline constexpr std::size_t kReconnectBufferFrames = 1000;

// One TCP connection to the broker. A reader thread moves inbound frames
// into an inbox. Any thread may publish.
class BusClient {
 public:
  BusClient(std::string sender, net::Endpoint endpoint, RetryPolicy retry = {});
  ~BusClient();
  BusClient(const BusClient&) = delete;
  BusClient& operator=(const BusClient&) = delete;

  const std::string& sender() const noexcept { return sender_; }

  // Connects with exponential backoff. Throws Error(BusUnreachable).
  void connect();
  // Single attempt; on success re-sends subscriptions and flushes the
  // reconnect buffer in order.
  bool try_reconnect();
  void close();
  bool connected() const;

  void subscribe(const std::string& pattern);
  void unsubscribe(const std::string& pattern);

  // Sends a validated PUB; buffers it (drop-oldest, 1000 frames) while
  // disconnected.
  PublishStatus publish(const bus::MessageEnvelope& msg);

  // Round-trip barrier: returns every delivery that arrived before the
  // broker's reply to a fresh PING. Throws Error(BusDisconnected).
  std::vector<bus::MessageEnvelope> sync(std::chrono::milliseconds timeout = std::chrono::seconds(30));

  // Next inbound PUB, waiting up to `timeout`.
  std::optional<bus::MessageEnvelope> next(std::chrono::milliseconds timeout);

  std::size_t buffered_frames() const;
  std::uint64_t dropped_frames() const;
  std::uint64_t errors_received() const;

 private:
  void start_reader();
  void reader_loop(int fd);
  bool send_frame_locked(const std::string& frame);
  void mark_disconnected();

  std::string sender_;
  net::Endpoint endpoint_;
  RetryPolicy retry_;

  mutable std::mutex send_mu_;
  net::Fd fd_;
  bool connected_ = false;
  std::deque<std::string> buffer_;
  std::uint64_t dropped_ = 0;
  std::map<std::string, int> subs_;
  std::uint64_t nonce_ = 0;

  mutable std::mutex inbox_mu_;
  std::condition_variable inbox_cv_;
  std::deque<bus::MessageEnvelope> inbox_;
  bool reader_alive_ = false;
  std::uint64_t errors_ = 0;
  std::thread reader_;
};

}  // namespace plugsim::agent
