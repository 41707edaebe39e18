#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plugsim::net {

// Owning POSIX file descriptor.
class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) noexcept : fd_(fd) {}
  Fd(Fd&& other) noexcept : fd_(other.release()) {}
  Fd& operator=(Fd&& other) noexcept;
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void reset(int fd = -1) noexcept;

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

// "host:port" or ":port" or "port".
Endpoint parse_endpoint(std::string_view text, std::uint16_t default_port);

// Bound, listening socket. Throws Error(AddressInUse) or Error(IoError).
Fd listen_tcp(const std::string& bind_host, std::uint16_t port, int backlog = 128);
std::uint16_t local_port(const Fd& fd);

// Returns an invalid Fd when the peer refuses or is unreachable.
Fd connect_tcp(const Endpoint& ep);

void set_nonblocking(const Fd& fd);
void set_nodelay(const Fd& fd);

// Blocking write of the whole buffer; false when the peer is gone.
bool send_all(const Fd& fd, std::string_view data);

// Splits a byte stream into newline-terminated records with a length cap.
// Oversized records are reported once and skipped up to their newline.
class LineReader {
 public:
  explicit LineReader(std::size_t max_line) : max_line_(max_line) {}

  struct Event {
    enum Kind { Line, Oversized } kind;
    std::string data;  // includes the trailing '\n' for Line
  };

  void feed(std::string_view bytes, std::vector<Event>& out);
  bool has_partial() const noexcept { return !buffer_.empty() || discarding_; }
  const std::string& partial() const noexcept { return buffer_; }

 private:
  std::size_t max_line_;
  std::string buffer_;
  bool discarding_ = false;
};

// Accepts one connection with a deadline; invalid Fd on timeout.
Fd accept_with_timeout(const Fd& listener, std::chrono::milliseconds timeout);

// Blocking line read helper for simple request/response protocols.
class LineSocket {
 public:
  LineSocket() = default;
  LineSocket(Fd fd, std::size_t max_line) : fd_(std::move(fd)), reader_(max_line) {}

  // nullopt on orderly close; throws Error(MalformedFrame) when the stream
  // ends mid-record or a record is oversized.
  std::optional<std::string> read_line();
  bool write(std::string_view data) { return send_all(fd_, data); }
  const Fd& fd() const noexcept { return fd_; }
  void close() { fd_.reset(); }
  // Unblocks a reader in another thread without releasing the descriptor.
  void shutdown() noexcept;

 private:
  Fd fd_;
  LineReader reader_{1u << 20};
  std::vector<LineReader::Event> pending_;
  std::size_t next_ = 0;
};

}  // namespace plugsim::net
