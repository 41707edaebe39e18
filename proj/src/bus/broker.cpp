#include "plugsim/bus/broker.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <map>
#include <mutex>
#include <vector>

#include "plugsim/bus/envelope.hpp"
#include "plugsim/bus/router.hpp"
#include "plugsim/error.hpp"

namespace plugsim::bus {

namespace {

std::int64_t wall_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

struct Connection {
  ConnectionId id = 0;
  net::Fd fd;
  net::LineReader reader;
  std::string outbox;
  std::size_t out_offset = 0;
  bool closing = false;

  Connection(ConnectionId i, net::Fd f, std::size_t max_line)
      : id(i), fd(std::move(f)), reader(max_line) {}

  std::size_t backlog() const { return outbox.size() - out_offset; }
};

}  // namespace

struct Broker::Impl {
  BrokerLimits limits;
  net::Fd listener;
  net::Fd wake_read, wake_write;
  std::atomic<bool> stopping{false};
  std::map<ConnectionId, std::unique_ptr<Connection>> conns;
  SubscriptionTable table;
  ConnectionId next_id = 1;

  mutable std::mutex stats_mu;
  BrokerStats stats;

  void enqueue(Connection& c, std::string_view bytes) {
    if (c.closing) return;
    c.outbox.append(bytes);
    flush(c);
    if (c.backlog() > limits.max_outbound_bytes) c.closing = true;
  }

  void flush(Connection& c) {
    while (c.backlog() > 0) {
      ssize_t n = ::send(c.fd.get(), c.outbox.data() + c.out_offset, c.backlog(),
                         MSG_NOSIGNAL | MSG_DONTWAIT);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) break;
        c.closing = true;
        return;
      }
      c.out_offset += static_cast<std::size_t>(n);
    }
    if (c.out_offset == c.outbox.size()) {
      c.outbox.clear();
      c.out_offset = 0;
    } else if (c.out_offset > (1u << 20)) {
      c.outbox.erase(0, c.out_offset);
      c.out_offset = 0;
    }
  }

  void send_err(Connection& c, const Error& err) {
    auto msg = make_control(FrameKind::Err, "broker", {},
                            {{"error", std::string(to_string(err.code()))}, {"detail", err.detail()}});
    msg.ts_ms = wall_ms();
    enqueue(c, encode_frame(msg));
    std::lock_guard lk(stats_mu);
    ++stats.errors_sent;
  }

  void handle_line(Connection& c, const std::string& line) {
    {
      std::lock_guard lk(stats_mu);
      ++stats.frames_in;
    }
    MessageEnvelope msg;
    try {
      msg = decode_frame(line);
    } catch (const Error& err) {
      send_err(c, err);
      return;
    }
    switch (msg.kind) {
      case FrameKind::Pub: {
        auto targets = table.match(msg.topic);
        for (auto id : targets) {
          auto it = conns.find(id);
          if (it != conns.end()) enqueue(*it->second, line);
        }
        std::lock_guard lk(stats_mu);
        ++stats.publishes;
        stats.deliveries += targets.size();
        ++stats.publishes_by_prefix[msg.topic.substr(0, msg.topic.find('/'))];
        break;
      }
      case FrameKind::Sub:
        table.subscribe(msg.pattern, c.id);
        break;
      case FrameKind::Unsub:
        table.unsubscribe(msg.pattern, c.id);
        break;
      case FrameKind::Ping: {
        auto pong = make_control(FrameKind::Pong, "broker", {}, msg.headers);
        pong.ts_ms = wall_ms();
        enqueue(c, encode_frame(pong));
        break;
      }
      case FrameKind::Pong:
      case FrameKind::Err:
        break;
    }
  }

  void read_from(Connection& c) {
    char buf[65536];
    while (true) {
      ssize_t n = ::recv(c.fd.get(), buf, sizeof buf, MSG_DONTWAIT);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno != EAGAIN && errno != EWOULDBLOCK) c.closing = true;
        return;
      }
      if (n == 0) {
        c.closing = true;
        return;
      }
      std::vector<net::LineReader::Event> events;
      c.reader.feed({buf, static_cast<std::size_t>(n)}, events);
      for (auto& ev : events) {
        if (ev.kind == net::LineReader::Event::Oversized) {
          send_err(c, Error(Errc::MalformedFrame, "frame exceeds 1 MiB"));
        } else {
          handle_line(c, ev.data);
        }
      }
      if (static_cast<std::size_t>(n) < sizeof buf) return;
    }
  }

  void accept_all() {
    while (true) {
      int raw = ::accept4(listener.get(), nullptr, nullptr, SOCK_NONBLOCK | SOCK_CLOEXEC);
      if (raw < 0) return;
      net::Fd fd(raw);
      if (conns.size() >= limits.max_connections) continue;
      net::set_nodelay(fd);
      auto id = next_id++;
      conns.emplace(id, std::make_unique<Connection>(id, std::move(fd), limits.max_frame_bytes));
      std::lock_guard lk(stats_mu);
      ++stats.connections_accepted;
    }
  }

  void reap() {
    for (auto it = conns.begin(); it != conns.end();) {
      if (it->second->closing) {
        table.drop_connection(it->first);
        it = conns.erase(it);
      } else {
        ++it;
      }
    }
  }

  void loop() {
    std::vector<pollfd> fds;
    std::vector<ConnectionId> ids;
    while (!stopping.load()) {
      fds.clear();
      ids.clear();
      fds.push_back({wake_read.get(), POLLIN, 0});
      fds.push_back({listener.get(), POLLIN, 0});
      for (auto& [id, c] : conns) {
        short events = POLLIN;
        if (c->backlog() > 0) events |= POLLOUT;
        fds.push_back({c->fd.get(), events, 0});
        ids.push_back(id);
      }
      int rc = ::poll(fds.data(), fds.size(), 500);
      if (rc < 0) {
        if (errno == EINTR) continue;
        break;
      }
      if (fds[0].revents & POLLIN) break;
      if (fds[1].revents & POLLIN) accept_all();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = conns.find(ids[i]);
        if (it == conns.end()) continue;
        auto& c = *it->second;
        auto rev = fds[i + 2].revents;
        if (rev & POLLOUT) flush(c);
        if (rev & (POLLIN | POLLHUP | POLLERR)) read_from(c);
      }
      reap();
    }
    conns.clear();
    listener.reset();
  }
};

Broker::Broker(std::uint16_t port, BrokerLimits limits, std::string bind_host)
    : impl_(std::make_unique<Impl>()) {
  impl_->limits = limits;
  impl_->listener = net::listen_tcp(bind_host, port);
  net::set_nonblocking(impl_->listener);
  port_ = net::local_port(impl_->listener);
  int pipefd[2];
  if (::pipe2(pipefd, O_CLOEXEC) != 0) throw Error(Errc::IoError, "pipe");
  impl_->wake_read.reset(pipefd[0]);
  impl_->wake_write.reset(pipefd[1]);
}

Broker::~Broker() { stop(); }

void Broker::run() { impl_->loop(); }

void Broker::start() {
  thread_ = std::thread([this] { run(); });
}

void Broker::stop() {
  if (!impl_->stopping.exchange(true)) {
    char byte = 1;
    [[maybe_unused]] auto n = ::write(impl_->wake_write.get(), &byte, 1);
  }
  if (thread_.joinable()) thread_.join();
}

BrokerStats Broker::stats() const {
  std::lock_guard lk(impl_->stats_mu);
  return impl_->stats;
}

}  // namespace plugsim::bus
