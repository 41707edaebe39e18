#include <doctest.h>

#include <random>
#include <thread>

#include "../support/oracles.hpp"
#include "plugsim/agent/bus_client.hpp"
#include "plugsim/bus/broker.hpp"
#include "plugsim/bus/envelope.hpp"
#include "plugsim/error.hpp"
#include "plugsim/net/socket.hpp"

using namespace plugsim;
using namespace std::chrono_literals;
using agent::BusClient;
using bus::MessageEnvelope;

namespace {

std::vector<std::string> topics_of(const std::vector<MessageEnvelope>& msgs) {
  std::vector<std::string> out;
  for (const auto& m : msgs) out.push_back(m.topic);
  return out;
}

std::string random_topic(std::mt19937& rng) {
  static const char* segs[] = {"devices", "b1", "fridge1", "power", "dr", "x"};
  std::uniform_int_distribution<int> depth(1, 4), pick(0, 5);
  std::string out;
  for (int i = 0, n = depth(rng); i < n; ++i) out += (i ? "/" : "") + std::string(segs[pick(rng)]);
  return out;
}

}  // namespace

TEST_CASE("frames reach a subscriber in publication order") {
  bus::Broker broker(0);
  broker.start();
  BusClient a("a", broker.endpoint()), b("b", broker.endpoint());
  a.connect();
  b.connect();
  a.subscribe("clock");
  a.sync();
  for (int i = 0; i < 3; ++i) b.publish(bus::make_pub("clock/tick", i, "b", i * 60000));
  b.sync();
  auto got = a.sync();
  REQUIRE(got.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(got[i].payload == i);
  CHECK(got[0].sender == "b");
}

TEST_CASE("garbage then SUB: ERR first, then the subscription works") {
  bus::Broker broker(0);
  broker.start();
  net::LineSocket raw(net::connect_tcp(broker.endpoint()), 1 << 20);
  REQUIRE(raw.fd());
  raw.write("this is not a frame\n");
  raw.write(bus::encode_frame(bus::make_control(bus::FrameKind::Sub, "raw", "devices")));
  raw.write(bus::encode_frame(bus::make_control(bus::FrameKind::Ping, "raw", {}, {{"n", "1"}})));
  auto err = bus::decode_frame(*raw.read_line());
  CHECK(err.kind == bus::FrameKind::Err);
  auto pong = bus::decode_frame(*raw.read_line());
  CHECK(pong.kind == bus::FrameKind::Pong);
  CHECK(pong.headers.at("n") == "1");

  BusClient pub("pub", broker.endpoint());
  pub.connect();
  pub.publish(bus::make_pub("devices/b1/x/power", 5.0, "pub", 0));
  auto msg = bus::decode_frame(*raw.read_line());
  CHECK(msg.topic == "devices/b1/x/power");
  CHECK(broker.stats().errors_sent == 1);
}

TEST_CASE("oversized frame is rejected and the connection keeps working") {
  bus::BrokerLimits limits;
  limits.max_frame_bytes = 4096;
  bus::Broker broker(0, limits);
  broker.start();
  net::LineSocket raw(net::connect_tcp(broker.endpoint()), 1 << 20);
  raw.write(std::string(10000, 'x') + "\n");
  raw.write(bus::encode_frame(bus::make_control(bus::FrameKind::Ping, "raw")));
  CHECK(bus::decode_frame(*raw.read_line()).kind == bus::FrameKind::Err);
  CHECK(bus::decode_frame(*raw.read_line()).kind == bus::FrameKind::Pong);
}

TEST_CASE("closing a connection drops its subscriptions") {
  bus::Broker broker(0);
  broker.start();
  BusClient pub("pub", broker.endpoint());
  pub.connect();
  {
    BusClient sub("sub", broker.endpoint());
    sub.connect();
    sub.subscribe("a");
    sub.sync();
  }
  std::this_thread::sleep_for(200ms);
  pub.publish(bus::make_pub("a/b", 1, "pub", 0));
  pub.sync();
  CHECK(broker.stats().deliveries == 0);
}

TEST_CASE("a second broker on the same port fails with AddressInUse") {
  bus::Broker broker(0);
  try {
    bus::Broker again(broker.port());
    FAIL("expected AddressInUse");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AddressInUse);
  }
}

TEST_CASE("two device subscribers each see every devices publish once under fuzz") {
  bus::Broker broker(0);
  broker.start();
  std::vector<std::unique_ptr<BusClient>> subs;
  std::vector<oracle::Sub> table;
  for (int i = 0; i < 2; ++i) {
    subs.push_back(std::make_unique<BusClient>("s" + std::to_string(i), broker.endpoint()));
    subs.back()->connect();
    subs.back()->subscribe("devices");
    subs.back()->sync();
    table.push_back({static_cast<std::uint64_t>(i), "devices"});
  }
  BusClient pub("pub", broker.endpoint());
  pub.connect();
  std::mt19937 rng(99);
  std::vector<std::string> published;
  for (int i = 0; i < 500; ++i) {
    auto t = random_topic(rng);
    published.push_back(t);
    pub.publish(bus::make_pub(t, i, "pub", i));
  }
  pub.sync();
  for (std::size_t s = 0; s < subs.size(); ++s) {
    std::vector<std::string> expected;
    for (const auto& t : published) {
      auto who = oracle::route(table, t);
      if (std::find(who.begin(), who.end(), s) != who.end()) expected.push_back(t);
    }
    CHECK(topics_of(subs[s]->sync()) == expected);
  }
}

TEST_CASE("broker counts publishes per first topic segment") {
  bus::Broker broker(0);
  broker.start();
  BusClient pub("pub", broker.endpoint());
  pub.connect();
  pub.publish(bus::make_pub("devices/a/b/power", 1, "pub", 0));
  pub.publish(bus::make_pub("devices/a/c/power", 1, "pub", 0));
  pub.publish(bus::make_pub("dr/price", 0.1, "pub", 0));
  pub.sync();
  auto stats = broker.stats();
  CHECK(stats.publishes == 3);
  CHECK(stats.publishes_by_prefix.at("devices") == 2);
  CHECK(stats.publishes_by_prefix.at("dr") == 1);
}
