#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plugsim/coord/metrics.hpp"
#include "plugsim/ingest/csv.hpp"

namespace plugsim::sim {

struct DeviceSummary {
  std::string id;
  std::string topic;  // power topic the figures come from
  double energy_kwh = 0;
  double peak_w = 0;
  std::vector<double> power_w;  // on the report grid
};

struct RunReport {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
  std::int64_t ticks = 0;
  std::vector<DeviceSummary> devices;  // sorted by id
  coord::PowerSeries aggregate;
  double aggregate_energy_kwh = 0;
  double demand_window_s = 900;
  std::optional<double> rolling_peak_w;  // absent when the run is shorter than the window
  double demand_rate_per_kw = 15;
  std::optional<double> demand_charge;
  std::vector<nlohmann::json> shed_events;
  std::vector<nlohmann::json> dr_events;
  std::map<std::string, std::uint64_t> message_counts;  // first topic segment -> publishes
  std::vector<std::string> logs;
  std::size_t historian_rows = 0;

  const DeviceSummary* device(const std::string& id) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct ReportOptions {
  std::optional<double> start_s;
  std::optional<double> end_s;
  std::optional<double> dt_s;  // inferred from sample spacing when absent
  double window_s = 900;
  double rate_per_kw = 15;
};

// Device id of `devices/<building>/<id>/power`, else nullopt.
std::optional<std::string> power_topic_device(std::string_view topic);

// Energy, aggregate series, rolling peak and demand charge from historian
// rows. Each power reading holds until the device's next reading. Throws
// EmptyHistorian when there is no power reading.
RunReport make_report(const std::vector<ingest::PointRecord>& rows, const ReportOptions& opts = {});

// report.json, report.txt, aggregate.csv and power_<id>.csv in `dir`.
void write_report_artifacts(const RunReport& report, const std::filesystem::path& dir);

// Peak, charge and energy of a baseline and an alternative run.
nlohmann::json compare_reports(const RunReport& baseline, const RunReport& alternative);
std::string comparison_text(const nlohmann::json& comparison);

}  // namespace plugsim::sim
