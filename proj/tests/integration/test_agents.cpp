#include <doctest.h>

#include <memory>
#include <optional>
#include <thread>

#include "plugsim/agent/agent.hpp"
#include "plugsim/bus/broker.hpp"
#include "plugsim/error.hpp"

using namespace plugsim;
using namespace std::chrono_literals;
using agent::Agent;
using agent::AgentConfig;
using agent::ManualClock;

namespace {

AgentConfig config_for(const std::string& id, const bus::Broker& broker) {
  AgentConfig cfg;
  cfg.agent_id = id;
  cfg.bus_endpoint = broker.endpoint();
  return cfg;
}

std::uint16_t free_port() {
  bus::Broker probe(0);
  return probe.port();
}

agent::RetryPolicy fast_retry() { return {100ms, 400ms, 20}; }

}  // namespace

TEST_CASE("a binding on clock runs once per tick publication") {
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<ManualClock>();
  Agent publisher(config_for("clock", broker)), listener(config_for("listener", broker));
  int calls = 0;
  listener.bind("clock", [&](const bus::MessageEnvelope& m) {
    CHECK(m.topic == "clock/tick");
    ++calls;
  });
  publisher.start(clock);
  listener.start(clock);
  for (int i = 0; i < 4; ++i) publisher.publish_at(i * 60000, "clock/tick", i * 60000);
  publisher.client()->sync();
  listener.drain();
  CHECK(calls == 4);
}

TEST_CASE("overlapping bindings each fire once for a matching topic") {
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<ManualClock>();
  Agent a(config_for("a", broker));
  int short_calls = 0, long_calls = 0, other_calls = 0;
  a.bind("a", [&](const bus::MessageEnvelope&) { ++short_calls; });
  a.bind("a/b", [&](const bus::MessageEnvelope&) { ++long_calls; });
  a.bind("a/c", [&](const bus::MessageEnvelope&) { ++other_calls; });
  a.start(clock);
  a.publish("a/b/c", 1);
  a.drain();
  CHECK(short_calls == 1);
  CHECK(long_calls == 1);
  CHECK(other_calls == 0);
  CHECK(a.handled_messages() == 1);
}

TEST_CASE("an agent started before its broker connects once the broker appears") {
  const auto port = free_port();
  std::optional<bus::Broker> broker;
  std::jthread late([&] {
    std::this_thread::sleep_for(1s);
    broker.emplace(port);
    broker->start();
  });
  AgentConfig cfg;
  cfg.agent_id = "early";
  cfg.bus_endpoint = {"127.0.0.1", port};
  Agent a(cfg);
  int calls = 0;
  a.bind("x", [&](const bus::MessageEnvelope&) { ++calls; });
  auto t0 = std::chrono::steady_clock::now();
  a.start(std::make_shared<ManualClock>(), fast_retry());
  CHECK(std::chrono::steady_clock::now() - t0 >= 900ms);
  a.publish("x/y", 1);
  a.drain();
  CHECK(calls == 1);
  a.stop();
  late.join();
  broker->stop();
}

TEST_CASE("an unreachable broker raises BusUnreachable after the retry budget") {
  AgentConfig cfg;
  cfg.agent_id = "lonely";
  cfg.bus_endpoint = {"127.0.0.1", free_port()};
  Agent a(cfg);
  try {
    a.start(std::make_shared<ManualClock>(), {10ms, 20ms, 3});
    FAIL("expected BusUnreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BusUnreachable);
  }
}

TEST_CASE("lockstep heartbeats fire at multiples of their period") {
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<ManualClock>();
  Agent a(config_for("hb", broker));
  std::vector<std::int64_t> fast, slow;
  a.every(60, [&] { fast.push_back(a.now_ms()); });
  a.every(120, [&] { slow.push_back(a.now_ms()); });
  a.start(clock);
  for (std::int64_t t = 0; t < 600000; t += 60000) {
    clock->set(t);
    a.tick(t);
  }
  CHECK(a.heartbeat_firings(0) == 10);
  CHECK(a.heartbeat_firings(1) == 5);
  CHECK(fast.size() == 10);
  CHECK(slow == std::vector<std::int64_t>{0, 120000, 240000, 360000, 480000});
}

TEST_CASE("a throwing heartbeat action is logged and keeps its schedule") {
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<ManualClock>();
  Agent a(config_for("flaky", broker));
  int calls = 0;
  a.every(60, [&] {
    if (++calls == 3) throw std::runtime_error("boom");
  });
  a.start(clock);
  for (std::int64_t t = 0; t < 300000; t += 60000) a.tick(t);
  CHECK(a.heartbeat_firings() == 5);
  CHECK(a.log().error_count() == 1);
  auto lines = a.log().lines();
  REQUIRE(lines.size() == 1);
  CHECK(lines[0].find("boom") != std::string::npos);
}

TEST_CASE("a throwing handler does not stop later deliveries") {
  bus::Broker broker(0);
  broker.start();
  Agent a(config_for("h", broker));
  int seen = 0;
  a.bind("t", [&](const bus::MessageEnvelope& m) {
    ++seen;
    if (m.payload == 1) throw std::runtime_error("bad payload");
  });
  a.start(std::make_shared<ManualClock>());
  for (int i = 0; i < 3; ++i) a.publish("t/x", i);
  a.drain();
  CHECK(seen == 3);
  CHECK(a.log().error_count() == 1);
}

TEST_CASE("publishing to an invalid topic raises InvalidTopic and sends nothing") {
  bus::Broker broker(0);
  broker.start();
  Agent a(config_for("bad", broker));
  int calls = 0;
  a.bind("a", [&](const bus::MessageEnvelope&) { ++calls; });
  a.start(std::make_shared<ManualClock>());
  for (const char* topic : {"a//b", "", "/a", "a/", "a b"}) {
    try {
      a.publish(topic, 1);
      FAIL("expected InvalidTopic for '" << topic << "'");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvalidTopic);
    }
  }
  a.drain();
  CHECK(calls == 0);
  CHECK(broker.stats().publishes == 0);
}

TEST_CASE("publishes made while disconnected are delivered in order after reconnecting") {
  std::optional<bus::Broker> broker(std::in_place, 0);
  broker->start();
  const auto port = broker->port();
  auto clock = std::make_shared<ManualClock>();
  Agent sender(config_for("sender", *broker));
  sender.start(clock);
  broker.reset();
  auto deadline = std::chrono::steady_clock::now() + 5s;
  while (sender.client()->connected() && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(10ms);
  }
  REQUIRE_FALSE(sender.client()->connected());
  for (int i = 0; i < 1000; ++i) {
    CHECK(sender.publish_at(i, "devices/b/x/power", i) == agent::PublishStatus::Buffered);
  }
  CHECK(sender.client()->buffered_frames() == 1000);

  broker.emplace(port);
  broker->start();
  AgentConfig cfg;
  cfg.agent_id = "receiver";
  cfg.bus_endpoint = {"127.0.0.1", port};
  Agent receiver(cfg);
  std::vector<int> got;
  receiver.bind("devices", [&](const bus::MessageEnvelope& m) { got.push_back(m.payload.get<int>()); });
  receiver.start(clock);
  REQUIRE(sender.client()->try_reconnect());
  CHECK(sender.client()->buffered_frames() == 0);
  sender.client()->sync();
  receiver.drain();
  REQUIRE(got.size() == 1000);
  for (int i = 0; i < 1000; ++i) CHECK(got[i] == i);
  CHECK(sender.client()->dropped_frames() == 0);
}

TEST_CASE("the reconnect buffer drops the oldest frames past its capacity") {
  std::optional<bus::Broker> broker(std::in_place, 0);
  broker->start();
  Agent sender(config_for("sender", *broker));
  sender.start(std::make_shared<ManualClock>());
  broker.reset();
  auto deadline = std::chrono::steady_clock::now() + 5s;
  while (sender.client()->connected() && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(10ms);
  }
  REQUIRE_FALSE(sender.client()->connected());
  for (int i = 0; i < 1005; ++i) sender.publish_at(i, "x", i);
  CHECK(sender.client()->buffered_frames() == agent::kReconnectBufferFrames);
  CHECK(sender.client()->dropped_frames() == 5);
}

TEST_CASE("agents answering each other for a bounded exchange finish the tick") {
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<ManualClock>();
  Agent ping(config_for("ping", broker)), pong(config_for("pong", broker));
  int pings = 0, pongs = 0;
  ping.bind("pong", [&](const bus::MessageEnvelope& m) {
    ++pongs;
    if (m.payload.get<int>() < 50) ping.publish("ping", m.payload.get<int>() + 1);
  });
  pong.bind("ping", [&](const bus::MessageEnvelope& m) {
    ++pings;
    pong.publish("pong", m.payload.get<int>());
  });
  ping.every(60, [&] { ping.publish("ping", 0); });
  ping.start(clock);
  pong.start(clock);
  for (int round = 0; round < 60; ++round) {
    ping.tick(0);
    pong.tick(0);
  }
  while (ping.drain() + pong.drain() > 0) {
  }
  CHECK(pings == 60 * 51);
  CHECK(pongs == 60 * 51);
}

TEST_CASE("a self-feeding handler trips the per-tick delivery guard") {
  bus::Broker broker(0);
  broker.start();
  Agent a(config_for("loop", broker));
  a.bind("loop", [&](const bus::MessageEnvelope&) { a.publish("loop/again", 1); });
  a.start(std::make_shared<ManualClock>());
  a.publish("loop/start", 0);
  try {
    a.tick(0);
    FAIL("expected TickOverflow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TickOverflow);
    CHECK(e.detail().find("loop/again") != std::string::npos);
  }
}

TEST_CASE("real-time heartbeats keep their period on a paced clock and stop before the end time") {
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<agent::PacedClock>(0, 600.0);
  Agent a(config_for("rt", broker));
  std::vector<std::int64_t> fired;
  a.every(60, [&] { fired.push_back(a.now_ms()); });
  a.start(clock);
  std::jthread runner([&](std::stop_token st) { a.run_realtime(st, 600000); });
  std::this_thread::sleep_for(1200ms);
  runner.request_stop();
  runner.join();
  REQUIRE(fired.size() >= 9);
  CHECK(fired.front() < 60000);
  CHECK(fired.back() < 600000);
  for (std::size_t i = 0; i < fired.size(); ++i) CHECK(fired[i] - fired.front() == static_cast<std::int64_t>(i) * 60000);
}
