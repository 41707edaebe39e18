#include "plugsim/agent/bus_client.hpp"

#include <sys/socket.h>

#include <algorithm>

#include "plugsim/error.hpp"

namespace plugsim::agent {

using bus::FrameKind;
using bus::MessageEnvelope;

std::chrono::milliseconds RetryPolicy::delay(int attempt) const {
  auto d = initial;
  for (int i = 0; i < attempt && d < cap; ++i) d *= 2;
  return std::min(d, cap);
}

BusClient::BusClient(std::string sender, net::Endpoint endpoint, RetryPolicy retry)
    : sender_(std::move(sender)), endpoint_(std::move(endpoint)), retry_(retry) {}

BusClient::~BusClient() { close(); }

void BusClient::connect() {
  for (int attempt = 0; attempt < std::max(1, retry_.max_attempts); ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(retry_.delay(attempt - 1));
    if (try_reconnect()) return;
  }
  throw Error(Errc::BusUnreachable, endpoint_.str());
}

bool BusClient::try_reconnect() {
  {
    std::lock_guard lk(send_mu_);
    if (connected_) return true;
  }
  if (reader_.joinable()) reader_.join();
  std::lock_guard lk(send_mu_);
  auto fd = net::connect_tcp(endpoint_);
  if (!fd) return false;
  fd_ = std::move(fd);
  connected_ = true;
  start_reader();
  for (const auto& [pattern, count] : subs_) {
    auto frame = bus::encode_frame(bus::make_control(FrameKind::Sub, sender_, pattern));
    for (int i = 0; i < count; ++i) {
      if (!send_frame_locked(frame)) return false;
    }
  }
  while (!buffer_.empty()) {
    if (!send_frame_locked(buffer_.front())) return false;
    buffer_.pop_front();
  }
  return true;
}

void BusClient::start_reader() {
  {
    std::lock_guard lk(inbox_mu_);
    reader_alive_ = true;
  }
  reader_ = std::thread([this, fd = fd_.get()] { reader_loop(fd); });
}

void BusClient::reader_loop(int fd) {
  net::LineReader reader(bus::kMaxFrameBytes);
  std::vector<net::LineReader::Event> events;
  char buf[65536];
  while (true) {
    ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    events.clear();
    reader.feed({buf, static_cast<std::size_t>(n)}, events);
    std::lock_guard lk(inbox_mu_);
    for (auto& ev : events) {
      if (ev.kind != net::LineReader::Event::Line) {
        ++errors_;
        continue;
      }
      try {
        auto msg = bus::decode_frame(ev.data);
        if (msg.kind == FrameKind::Err) {
          ++errors_;
          continue;
        }
        inbox_.push_back(std::move(msg));
      } catch (const Error&) {
        ++errors_;
      }
    }
    inbox_cv_.notify_all();
  }
  mark_disconnected();
}

void BusClient::mark_disconnected() {
  {
    std::lock_guard lk(send_mu_);
    connected_ = false;
  }
  {
    std::lock_guard lk(inbox_mu_);
    reader_alive_ = false;
  }
  inbox_cv_.notify_all();
}

void BusClient::close() {
  {
    std::lock_guard lk(send_mu_);
    if (fd_) ::shutdown(fd_.get(), SHUT_RDWR);
    connected_ = false;
  }
  if (reader_.joinable()) reader_.join();
  std::lock_guard lk(send_mu_);
  fd_.reset();
}

bool BusClient::connected() const {
  std::scoped_lock lk(send_mu_, inbox_mu_);
  return connected_ && reader_alive_;
}

bool BusClient::send_frame_locked(const std::string& frame) {
  if (!connected_) return false;
  if (!net::send_all(fd_, frame)) {
    connected_ = false;
    ::shutdown(fd_.get(), SHUT_RDWR);
    return false;
  }
  return true;
}

void BusClient::subscribe(const std::string& pattern) {
  auto frame = bus::encode_frame(bus::make_control(FrameKind::Sub, sender_, pattern));
  std::lock_guard lk(send_mu_);
  ++subs_[pattern];
  send_frame_locked(frame);
}

void BusClient::unsubscribe(const std::string& pattern) {
  auto frame = bus::encode_frame(bus::make_control(FrameKind::Unsub, sender_, pattern));
  std::lock_guard lk(send_mu_);
  auto it = subs_.find(pattern);
  if (it == subs_.end()) return;
  if (--it->second == 0) subs_.erase(it);
  send_frame_locked(frame);
}

PublishStatus BusClient::publish(const MessageEnvelope& msg) {
  auto frame = bus::encode_frame(msg);
  std::lock_guard lk(send_mu_);
  if (connected_ && buffer_.empty() && send_frame_locked(frame)) return PublishStatus::Sent;
  if (buffer_.size() >= kReconnectBufferFrames) {
    buffer_.pop_front();
    ++dropped_;
  }
  buffer_.push_back(std::move(frame));
  return PublishStatus::Buffered;
}

std::vector<MessageEnvelope> BusClient::sync(std::chrono::milliseconds timeout) {
  std::string nonce;
  {
    std::lock_guard lk(send_mu_);
    nonce = sender_ + "#" + std::to_string(++nonce_);
    auto ping = bus::make_control(FrameKind::Ping, sender_, {}, {{"sync", nonce}});
    if (!send_frame_locked(bus::encode_frame(ping))) {
      throw Error(Errc::BusDisconnected, sender_);
    }
  }
  std::unique_lock lk(inbox_mu_);
  auto is_mine = [&](const MessageEnvelope& m) {
    if (m.kind != FrameKind::Pong) return false;
    auto it = m.headers.find("sync");
    return it != m.headers.end() && it->second == nonce;
  };
  auto found = inbox_.end();
  bool ok = inbox_cv_.wait_for(lk, timeout, [&] {
    found = std::find_if(inbox_.begin(), inbox_.end(), is_mine);
    return found != inbox_.end() || !reader_alive_;
  });
  if (!ok || found == inbox_.end()) {
    throw Error(Errc::BusDisconnected, sender_ + (ok ? ": connection lost" : ": sync timeout"));
  }
  std::vector<MessageEnvelope> out;
  for (auto it = inbox_.begin(); it != found; ++it) {
    if (it->kind == FrameKind::Pub) out.push_back(std::move(*it));
  }
  inbox_.erase(inbox_.begin(), std::next(found));
  return out;
}

std::optional<MessageEnvelope> BusClient::next(std::chrono::milliseconds timeout) {
  std::unique_lock lk(inbox_mu_);
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    while (!inbox_.empty()) {
      auto msg = std::move(inbox_.front());
      inbox_.pop_front();
      if (msg.kind == FrameKind::Pub) return msg;
    }
    if (!reader_alive_) return std::nullopt;
    if (inbox_cv_.wait_until(lk, deadline) == std::cv_status::timeout && inbox_.empty()) {
      return std::nullopt;
    }
  }
}

std::size_t BusClient::buffered_frames() const {
  std::lock_guard lk(send_mu_);
  return buffer_.size();
}

std::uint64_t BusClient::dropped_frames() const {
  std::lock_guard lk(send_mu_);
  return dropped_;
}

std::uint64_t BusClient::errors_received() const {
  std::lock_guard lk(inbox_mu_);
  return errors_;
}

}  // namespace plugsim::agent
