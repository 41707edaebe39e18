#include "plugsim/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "plugsim/error.hpp"

namespace plugsim::net {

Fd& Fd::operator=(Fd&& other) noexcept {
  if (this != &other) reset(other.release());
  return *this;
}

int Fd::release() noexcept {
  int fd = fd_;
  fd_ = -1;
  return fd;
}

void Fd::reset(int fd) noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = fd;
}

Endpoint parse_endpoint(std::string_view text, std::uint16_t default_port) {
  Endpoint ep;
  ep.port = default_port;
  auto colon = text.rfind(':');
  std::string_view host = text, port;
  if (colon != std::string_view::npos) {
    host = text.substr(0, colon);
    port = text.substr(colon + 1);
  } else if (!text.empty() && text.find_first_not_of("0123456789") == std::string_view::npos) {
    host = {};
    port = text;
  }
  if (!host.empty()) ep.host = std::string(host);
  if (!port.empty()) {
    unsigned long value = 0;
    try {
      value = std::stoul(std::string(port));
    } catch (const std::exception&) {
      throw Error(Errc::ConfigInvalid, "bad port in '" + std::string(text) + "'");
    }
    if (value > 65535) throw Error(Errc::ConfigInvalid, "port out of range");
    ep.port = static_cast<std::uint16_t>(value);
  }
  return ep;
}

namespace {

sockaddr_in resolve_v4(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  std::string h = host == "localhost" ? "127.0.0.1" : host;
  if (h.empty() || h == "*") h = "0.0.0.0";
  if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo* res = nullptr;
    if (::getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
      throw Error(Errc::ConfigInvalid, "cannot resolve host '" + host + "'");
    }
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
  }
  return addr;
}

}  // namespace

Fd listen_tcp(const std::string& bind_host, std::uint16_t port, int backlog) {
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd) throw Error(Errc::IoError, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  auto addr = resolve_v4(bind_host, port);
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    if (errno == EADDRINUSE) {
      throw Error(Errc::AddressInUse, bind_host + ":" + std::to_string(port));
    }
    throw Error(Errc::IoError, std::string("bind: ") + std::strerror(errno));
  }
  if (::listen(fd.get(), backlog) != 0) {
    throw Error(Errc::IoError, std::string("listen: ") + std::strerror(errno));
  }
  return fd;
}

std::uint16_t local_port(const Fd& fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

Fd connect_tcp(const Endpoint& ep) {
  sockaddr_in addr{};
  try {
    addr = resolve_v4(ep.host, ep.port);
  } catch (const Error&) {
    return {};
  }
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd) return {};
  if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) return {};
  set_nodelay(fd);
  return fd;
}

void set_nonblocking(const Fd& fd) {
  int flags = ::fcntl(fd.get(), F_GETFL, 0);
  ::fcntl(fd.get(), F_SETFL, flags | O_NONBLOCK);
}

void set_nodelay(const Fd& fd) {
  int one = 1;
  ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

bool send_all(const Fd& fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd.get(), data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        pollfd p{fd.get(), POLLOUT, 0};
        ::poll(&p, 1, 1000);
        continue;
      }
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

void LineReader::feed(std::string_view bytes, std::vector<Event>& out) {
  while (!bytes.empty()) {
    auto nl = bytes.find('\n');
    if (discarding_) {
      if (nl == std::string_view::npos) return;
      discarding_ = false;
      bytes.remove_prefix(nl + 1);
      continue;
    }
    if (nl == std::string_view::npos) {
      buffer_.append(bytes);
      if (buffer_.size() > max_line_) {
        buffer_.clear();
        discarding_ = true;
        out.push_back({Event::Oversized, {}});
      }
      return;
    }
    if (buffer_.size() + nl > max_line_) {
      buffer_.clear();
      out.push_back({Event::Oversized, {}});
    } else {
      buffer_.append(bytes.substr(0, nl + 1));
      out.push_back({Event::Line, std::move(buffer_)});
      buffer_.clear();
    }
    bytes.remove_prefix(nl + 1);
  }
}

Fd accept_with_timeout(const Fd& listener, std::chrono::milliseconds timeout) {
  pollfd p{listener.get(), POLLIN, 0};
  int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (rc <= 0) return {};
  Fd fd(::accept4(listener.get(), nullptr, nullptr, SOCK_CLOEXEC));
  if (fd) set_nodelay(fd);
  return fd;
}

std::optional<std::string> LineSocket::read_line() {
  while (true) {
    while (next_ < pending_.size()) {
      auto& ev = pending_[next_++];
      if (ev.kind == LineReader::Event::Oversized) {
        throw Error(Errc::MalformedFrame, "record exceeds length limit");
      }
      return std::move(ev.data);
    }
    pending_.clear();
    next_ = 0;
    char buf[65536];
    ssize_t n = ::recv(fd_.get(), buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (reader_.has_partial()) {
        throw Error(Errc::MalformedFrame, "stream closed mid-record");
      }
      return std::nullopt;
    }
    reader_.feed({buf, static_cast<std::size_t>(n)}, pending_);
  }
}

void LineSocket::shutdown() noexcept {
  if (fd_) ::shutdown(fd_.get(), SHUT_RDWR);
}

}  // namespace plugsim::net
