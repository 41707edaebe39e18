#include <doctest.h>

#include <map>
#include <memory>
#include <thread>

#include "../support/test_util.hpp"
#include "plugsim/agent/clock.hpp"
#include "plugsim/bus/broker.hpp"
#include "plugsim/ingest/agents.hpp"
#include "plugsim/ingest/csv.hpp"
#include "plugsim/sim/runner.hpp"
#include "plugsim/sim/scenario.hpp"

using namespace plugsim;
using agent::AgentConfig;
using agent::Json;
using agent::ManualClock;
using ingest::PointRecord;

namespace {

AgentConfig config_for(const std::string& id, const bus::Broker& broker, Json params = Json::object(),
                       double heartbeat_s = 60) {
  AgentConfig cfg;
  cfg.agent_id = id;
  cfg.bus_endpoint = broker.endpoint();
  cfg.heartbeat_s = heartbeat_s;
  cfg.params = std::move(params);
  return cfg;
}

}  // namespace

TEST_CASE("the historian writes one row per numeric delivery and skips the rest") {
  testutil::TempDir dir;
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<ManualClock>();
  ingest::HistorianAgent historian(
      config_for("historian", broker, {{"patterns", {"devices"}}, {"out", (dir.path() / "h.csv").string()}}));
  agent::Agent source(config_for("source", broker));
  historian.start(clock);
  source.start(clock);
  for (int i = 0; i < 10; ++i) source.publish_at(i * 1000, "devices/home/meter/power", 100.0 * i);
  source.publish_at(10000, "devices/home/meter/power", Json{{"w", 5}});
  source.publish_at(10000, "devices/home/meter/label", "text");
  source.publish_at(10000, "other/home/meter/power", 7);
  source.client()->sync();
  historian.drain();
  historian.stop();
  CHECK(historian.rows() == 10);
  CHECK(historian.skipped() == 2);
  auto rows = ingest::read_point_csv(historian.path());
  REQUIRE(rows.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(rows[i].ts_ms == i * 1000);
    CHECK(rows[i].topic == "devices/home/meter/power");
    CHECK(rows[i].value == 100.0 * i);
  }
}

TEST_CASE("three concurrent publishers: historian rows equal broker deliveries") {
  testutil::TempDir dir;
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<ManualClock>();
  ingest::HistorianAgent historian(
      config_for("historian", broker, {{"patterns", {"devices"}}, {"out", (dir.path() / "h.csv").string()}}));
  historian.start(clock);
  std::vector<std::unique_ptr<agent::Agent>> drivers;
  for (int d = 0; d < 3; ++d) {
    drivers.push_back(std::make_unique<agent::Agent>(config_for("driver-" + std::to_string(d), broker)));
    drivers.back()->start(clock);
  }
  {
    std::vector<std::jthread> threads;
    for (int d = 0; d < 3; ++d) {
      threads.emplace_back([&, d] {
        for (int i = 0; i < 500; ++i) {
          drivers[d]->publish_at(i, "devices/home/d" + std::to_string(d) + "/power", i);
        }
        drivers[d]->client()->sync();
      });
    }
  }
  historian.drain();
  historian.stop();
  CHECK(broker.stats().deliveries == 1500);
  CHECK(historian.rows() == 1500);
  auto rows = ingest::read_point_csv(historian.path());
  std::map<std::string, std::vector<double>> per_topic;
  for (const auto& r : rows) per_topic[r.topic].push_back(r.value);
  REQUIRE(per_topic.size() == 3);
  for (const auto& [topic, values] : per_topic) {
    REQUIRE(values.size() == 500);
    for (int i = 0; i < 500; ++i) CHECK(values[i] == i);
  }
}

TEST_CASE("replay publishes every due row in one firing, in file order") {
  testutil::TempDir dir;
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<ManualClock>();
  std::vector<PointRecord> rows{{0, "site/a/power", 1.5, "W"}, {20000, "site/b/power", 2.5, ""},
                                {40000, "site/a/power", 3.5, ""}};
  ingest::ReplayAgent replay(config_for("replay", broker), rows, "replayed");
  agent::Agent sink(config_for("sink", broker));
  std::vector<bus::MessageEnvelope> got;
  sink.bind("replayed", [&](const bus::MessageEnvelope& m) { got.push_back(m); });
  replay.start(clock);
  sink.start(clock);
  replay.tick(0);
  sink.drain();
  REQUIRE(got.size() == 1);
  CHECK(got[0].headers.at("unit") == "W");
  replay.tick(60000);
  sink.drain();
  REQUIRE(got.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(got[i].topic == "replayed/" + rows[i].topic);
    CHECK(got[i].ts_ms == rows[i].ts_ms);
    CHECK(got[i].payload.get<double>() == rows[i].value);
  }
  CHECK(replay.finished());
}

TEST_CASE("replay of a file with a header and no rows publishes nothing") {
  testutil::TempDir dir;
  auto path = dir.path() / "empty.csv";
  testutil::write_file(path, "ts_ms,topic,value\n");
  bus::Broker broker(0);
  broker.start();
  auto clock = std::make_shared<ManualClock>();
  ingest::ReplayAgent replay(config_for("replay", broker, {{"path", path.string()}}));
  replay.start(clock);
  for (std::int64_t t = 0; t < 600000; t += 60000) replay.tick(t);
  CHECK(replay.published() == 0);
  CHECK(replay.finished());
  CHECK(broker.stats().publishes == 0);
}

TEST_CASE("replay through the wall-paced helper preserves order") {
  bus::Broker broker(0);
  broker.start();
  agent::BusClient sender("replay", broker.endpoint()), sink("sink", broker.endpoint());
  sender.connect();
  sink.connect();
  sink.subscribe("r");
  sink.sync();
  std::vector<PointRecord> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({i * 1000, "x/power", static_cast<double>(i), ""});
  CHECK(ingest::csv_replay(sender, rows, 100000.0, "r") == 50);
  sender.sync();
  auto got = sink.sync();
  REQUIRE(got.size() == 50);
  for (int i = 0; i < 50; ++i) CHECK(got[i].payload.get<double>() == i);
}

TEST_CASE("a 24 h lockstep run records 1440 power rows per device") {
  auto doc = Json::parse(R"({
    "name": "two-devices",
    "sim": {"start_s": 0, "end_s": 86400, "timestep_s": 60},
    "devices": [
      {"kind": "refrigerator", "id": "fridge1"},
      {"kind": "load", "id": "base", "params": {"profile": [[0, 500], [86400, 500]]}}
    ]
  })");
  auto cfg = sim::parse_scenario(doc);
  sim::Simulation simulation(cfg);
  auto report = simulation.run();
  std::map<std::string, int> power_rows;
  for (const auto& r : ingest::read_point_csv(simulation.historian_path())) {
    if (auto id = sim::power_topic_device(r.topic)) ++power_rows[*id];
  }
  CHECK(power_rows["fridge1"] == 1440);
  CHECK(power_rows["base"] == 1440);
  CHECK(report.ticks == 1440);
  REQUIRE(report.device("base") != nullptr);
  CHECK(report.device("base")->energy_kwh == doctest::Approx(12.0).epsilon(1e-12));
}
