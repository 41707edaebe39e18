#include "http_server.hpp"

#include <deque>
#include <set>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"
#include "plugsim/hmi/bridge.hpp"

namespace plugsim::hmi {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;
using Json = nlohmann::json;

struct HttpServer::Impl {
  asio::io_context ioc;
  std::unique_ptr<tcp::acceptor> acceptor;
  std::vector<std::thread> threads;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, HttpServer& server)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), server_(server) {}

  ~WsSession() {
    if (server_.stopping()) return;
    for (const auto& p : patterns_) server_.owner().release_pattern(p);
  }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::decorator([](websocket::response_type& res) {
      res.set(http::field::server, "plugsim-bridge");
    }));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  // Called from any thread.
  void deliver(std::shared_ptr<const std::string> text, std::string topic) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text), topic = std::move(topic)] {
      for (const auto& p : self->patterns_) {
        if (bus::topic_matches(p, topic)) {
          self->enqueue(text);
          return;
        }
      }
    });
  }

  void close() {
    asio::post(ws_.get_executor(), [self = shared_from_this()] {
      self->closed_ = true;
      self->timer_.cancel();
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    server_.register_session(shared_from_this());
    schedule_ping();
    do_read();
  }

  void schedule_ping() {
    timer_.expires_after(server_.options().ping_interval);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->ws_.async_ping({}, [self](beast::error_code ping_ec) {
        if (!ping_ec) self->schedule_ping();
      });
    });
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->finish();
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->on_message(text);
      self->do_read();
    });
  }

  void finish() {
    closed_ = true;
    timer_.cancel();
    server_.unregister_session(this);
  }

  void reply(const Json& j) { enqueue(std::make_shared<const std::string>(j.dump())); }

  void error(std::string_view code, std::string detail) {
    reply({{"op", "error"}, {"error", std::string(code)}, {"detail", std::move(detail)}});
  }

  void on_message(const std::string& text) {
    Json msg = Json::parse(text, nullptr, false);
    if (msg.is_discarded() || !msg.is_object() || !msg.contains("op") || !msg["op"].is_string()) {
      error("MalformedFrame", "expected {\"op\": ...}");
      return;
    }
    const auto op = msg["op"].get<std::string>();
    std::vector<std::string> requested;
    if (msg.contains("patterns")) {
      if (!msg["patterns"].is_array()) {
        error("InvalidTopic", "patterns must be an array");
        return;
      }
      for (const auto& p : msg["patterns"]) {
        if (!p.is_string() || !bus::is_valid_topic(p.get<std::string>())) {
          error("InvalidTopic", p.dump());
          return;
        }
        requested.push_back(p.get<std::string>());
      }
    }
    if (op == "subscribe") {
      for (const auto& p : requested) {
        if (patterns_.insert(p).second) server_.owner().retain_pattern(p);
      }
      reply({{"op", "subscribed"}, {"patterns", patterns_}});
    } else if (op == "unsubscribe") {
      if (!msg.contains("patterns")) requested.assign(patterns_.begin(), patterns_.end());
      for (const auto& p : requested) {
        if (patterns_.erase(p)) server_.owner().release_pattern(p);
      }
      reply({{"op", "unsubscribed"}, {"patterns", patterns_}});
    } else {
      error("InvalidOp", "unknown op '" + op + "'");
    }
  }

  void enqueue(std::shared_ptr<const std::string> text) {
    if (closed_) return;
    if (queue_.size() >= server_.options().queue_limit) {
      // Drop the oldest waiting entry behind the in-flight head.
      auto victim = queue_.begin() + (writing_ ? 1 : 0);
      if (victim != queue_.end()) {
        queue_.erase(victim);
        ++dropped_;
        server_.add_dropped(1);
      }
    }
    queue_.push_back(std::move(text));
    if (!writing_) do_write();
  }

  void do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->queue_.pop_front();
                      if (ec) {
                        self->writing_ = false;
                        self->queue_.clear();
                        self->closed_ = true;
                        return;
                      }
                      if (self->queue_.empty()) {
                        self->writing_ = false;
                      } else {
                        self->do_write();
                      }
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  HttpServer& server_;
  beast::flat_buffer buffer_;
  std::set<std::string> patterns_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool writing_ = false;
  bool closed_ = false;
  std::uint64_t dropped_ = 0;
};

namespace {

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, HttpServer& server) : stream_(std::move(socket)), server_(server) {}

  void run() {
    asio::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->do_read(); });
  }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    std::string_view target(req_.target().data(), req_.target().size());
    auto path = target.substr(0, target.find('?'));
    if (websocket::is_upgrade(req_)) {
      if (path == "/api/v1/stream") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), server_)->run(std::move(req_));
        return;
      }
      respond(404, Json{{"error", "not found"}});
      return;
    }
    if (req_.method() == http::verb::options) {
      respond(204, nullptr);
      return;
    }
    auto method = std::string_view(req_.method_string().data(), req_.method_string().size());
    BridgeAgent::Response r;
    try {
      r = server_.owner().handle(method, path, req_.body());
    } catch (const std::exception& ex) {
      r = {500, Json{{"error", "internal"}, {"detail", ex.what()}}};
    }
    respond(r.status, r.body);
  }

  void respond(int status, const Json& body) {
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(status), req_.version());
    res->set(http::field::server, "plugsim-bridge");
    if (server_.options().cors) {
      res->set(http::field::access_control_allow_origin, "*");
      res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
      res->set(http::field::access_control_allow_headers, "Content-Type");
    }
    if (!body.is_null()) {
      res->set(http::field::content_type, "application/json");
      res->body() = body.dump();
    }
    res->keep_alive(req_.keep_alive());
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  HttpServer& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

void do_accept(tcp::acceptor& acceptor, asio::io_context& ioc, HttpServer& server) {
  acceptor.async_accept(asio::make_strand(ioc), [&acceptor, &ioc, &server](beast::error_code ec, tcp::socket socket) {
    if (ec == asio::error::operation_aborted || !acceptor.is_open()) return;
    if (!ec) std::make_shared<HttpSession>(std::move(socket), server)->run();
    do_accept(acceptor, ioc, server);
  });
}

}  // namespace

HttpServer::HttpServer(BridgeAgent& owner, HttpOptions options)
    : impl_(std::make_unique<Impl>()), owner_(owner), options_(std::move(options)) {
  beast::error_code ec;
  auto address = asio::ip::make_address(options_.bind, ec);
  if (ec) throw Error(Errc::ConfigInvalid, "bind address '" + options_.bind + "'");
  tcp::endpoint ep(address, options_.port);
  impl_->acceptor = std::make_unique<tcp::acceptor>(impl_->ioc);
  impl_->acceptor->open(ep.protocol(), ec);
  if (!ec) impl_->acceptor->set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor->bind(ep, ec);
  if (ec) {
    throw Error(ec == asio::error::address_in_use ? Errc::AddressInUse : Errc::IoError,
                options_.bind + ":" + std::to_string(options_.port) + ": " + ec.message());
  }
  impl_->acceptor->listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(Errc::IoError, "listen: " + ec.message());
  port_ = impl_->acceptor->local_endpoint().port();
  do_accept(*impl_->acceptor, impl_->ioc, *this);
  for (int i = 0; i < std::max(1, options_.threads); ++i) {
    impl_->threads.emplace_back([this] { impl_->ioc.run(); });
  }
}

HttpServer::~HttpServer() {
  stop();
  // Destroy pending handlers while members are alive.
  impl_.reset();
}

void HttpServer::stop() {
  if (stopping_.exchange(true)) return;
  asio::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor->close(ec);
  });
  std::vector<std::shared_ptr<WsSession>> live;
  {
    std::lock_guard lk(mu_);
    for (auto& w : sessions_) {
      if (auto s = w.lock()) live.push_back(std::move(s));
    }
    sessions_.clear();
  }
  for (auto& s : live) s->close();
  live.clear();
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
}

void HttpServer::broadcast(const bus::MessageEnvelope& msg) {
  std::vector<std::shared_ptr<WsSession>> live;
  {
    std::lock_guard lk(mu_);
    for (auto& w : sessions_) {
      if (auto s = w.lock()) live.push_back(std::move(s));
    }
  }
  if (live.empty()) return;
  auto frame = bus::encode_frame(msg);
  if (!frame.empty() && frame.back() == '\n') frame.pop_back();
  auto text = std::make_shared<const std::string>(std::move(frame));
  for (auto& s : live) s->deliver(text, msg.topic);
}

std::size_t HttpServer::sessions() const {
  std::lock_guard lk(mu_);
  std::size_t n = 0;
  for (const auto& w : sessions_) n += w.expired() ? 0 : 1;
  return n;
}

void HttpServer::register_session(const std::shared_ptr<WsSession>& s) {
  std::lock_guard lk(mu_);
  std::erase_if(sessions_, [](const std::weak_ptr<WsSession>& w) { return w.expired(); });
  sessions_.push_back(s);
}

void HttpServer::unregister_session(const WsSession* s) {
  std::lock_guard lk(mu_);
  std::erase_if(sessions_, [s](const std::weak_ptr<WsSession>& w) {
    auto p = w.lock();
    return !p || p.get() == s;
  });
}

}  // namespace plugsim::hmi
