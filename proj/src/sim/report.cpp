#include "plugsim/sim/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"

namespace plugsim::sim {

using Json = nlohmann::json;
using ingest::format_double;

namespace {

Json opt_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out.flush()) throw Error(Errc::IoError, "write failed: " + path.string());
}

}  // namespace

std::optional<std::string> power_topic_device(std::string_view topic) {
  auto parts = bus::split_topic(topic);
  if (parts.size() != 4 || parts[0] != "devices" || parts[3] != "power") return std::nullopt;
  return std::string(parts[2]);
}

const DeviceSummary* RunReport::device(const std::string& id) const {
  for (const auto& d : devices) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

RunReport make_report(const std::vector<ingest::PointRecord>& rows, const ReportOptions& opts) {
  std::map<std::string, std::vector<const ingest::PointRecord*>> by_topic;
  for (const auto& r : rows) {
    if (power_topic_device(r.topic)) by_topic[r.topic].push_back(&r);
  }
  if (by_topic.empty()) throw Error(Errc::EmptyHistorian, rows.empty() ? "no rows" : "no power readings");
  for (auto& [topic, list] : by_topic) {
    std::stable_sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->ts_ms < b->ts_ms; });
  }

  std::int64_t first_ms = std::numeric_limits<std::int64_t>::max();
  std::int64_t last_ms = std::numeric_limits<std::int64_t>::min();
  std::int64_t spacing_ms = std::numeric_limits<std::int64_t>::max();
  for (const auto& [topic, list] : by_topic) {
    first_ms = std::min(first_ms, list.front()->ts_ms);
    last_ms = std::max(last_ms, list.back()->ts_ms);
    for (std::size_t i = 1; i < list.size(); ++i) {
      auto d = list[i]->ts_ms - list[i - 1]->ts_ms;
      if (d > 0) spacing_ms = std::min(spacing_ms, d);
    }
  }
  if (spacing_ms == std::numeric_limits<std::int64_t>::max()) spacing_ms = 60000;
  const double dt_s = opts.dt_s.value_or(static_cast<double>(spacing_ms) / 1000.0);
  if (!(dt_s > 0)) throw Error(Errc::InvalidParams, "report dt must be positive");
  const double t0_s = opts.start_s.value_or(static_cast<double>(first_ms) / 1000.0);
  const double end_s = opts.end_s.value_or(static_cast<double>(last_ms) / 1000.0 + dt_s);
  const auto n = static_cast<std::size_t>(std::max<long long>(0, std::llround((end_s - t0_s) / dt_s)));

  RunReport report;
  report.demand_window_s = opts.window_s;
  report.demand_rate_per_kw = opts.rate_per_kw;
  report.historian_rows = rows.size();
  report.aggregate.t0_s = t0_s;
  report.aggregate.dt_s = dt_s;
  report.aggregate.values.assign(n, 0.0);

  for (const auto& [topic, list] : by_topic) {
    DeviceSummary d;
    d.id = *power_topic_device(topic);
    d.topic = topic;
    d.power_w.assign(n, 0.0);
    std::size_t next = 0;
    double held = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto grid_ms = std::llround((t0_s + static_cast<double>(i) * dt_s) * 1000.0);
      while (next < list.size() && list[next]->ts_ms <= grid_ms) held = list[next++]->value;
      d.power_w[i] = held;
    }
    double sum = 0;
    for (double w : d.power_w) sum += w;
    d.energy_kwh = sum * dt_s / 3.6e6;
    d.peak_w = d.power_w.empty() ? 0.0 : *std::max_element(d.power_w.begin(), d.power_w.end());
    for (std::size_t i = 0; i < n; ++i) report.aggregate.values[i] += d.power_w[i];
    report.devices.push_back(std::move(d));
  }
  std::sort(report.devices.begin(), report.devices.end(),
            [](const DeviceSummary& a, const DeviceSummary& b) { return a.topic < b.topic; });
  report.aggregate_energy_kwh = report.aggregate.energy_kwh();
  try {
    report.rolling_peak_w = coord::rolling_peak(report.aggregate, opts.window_s);
    report.demand_charge = coord::demand_charge(report.aggregate, opts.window_s, opts.rate_per_kw);
  } catch (const Error& err) {
    if (err.code() != Errc::SeriesTooShort && err.code() != Errc::InvalidParams) throw;
  }
  return report;
}

Json RunReport::to_json() const {
  Json devs = Json::array();
  for (const auto& d : devices) {
    devs.push_back({{"id", d.id}, {"topic", d.topic}, {"energy_kwh", d.energy_kwh}, {"peak_w", d.peak_w}});
  }
  Json counts = Json::object();
  for (const auto& [prefix, c] : message_counts) counts[prefix] = c;
  return {{"scenario", scenario},
          {"mode", mode},
          {"seed", seed},
          {"ticks", ticks},
          {"devices", std::move(devs)},
          {"aggregate_energy_kwh", aggregate_energy_kwh},
          {"aggregate", {{"t0_s", aggregate.t0_s}, {"dt_s", aggregate.dt_s}, {"samples", aggregate.values.size()}}},
          {"demand_window_s", demand_window_s},
          {"rolling_peak_w", opt_number(rolling_peak_w)},
          {"demand_rate_per_kw", demand_rate_per_kw},
          {"demand_charge", opt_number(demand_charge)},
          {"shed_events", shed_events},
          {"dr_events", dr_events},
          {"message_counts", std::move(counts)},
          {"logs", logs},
          {"historian_rows", historian_rows},
          {"background_note", "background load is a synthetic profile, not weather-driven"}};
}

std::string RunReport::to_text() const {
  std::ostringstream out;
  out << "scenario " << scenario << " (" << mode << ", seed " << seed << ", " << ticks << " ticks)\n";
  out << "devices:\n";
  for (const auto& d : devices) {
    out << "  " << d.id << "  " << format_double(d.energy_kwh) << " kWh  peak " << format_double(d.peak_w)
        << " W\n";
  }
  out << "aggregate energy " << format_double(aggregate_energy_kwh) << " kWh\n";
  out << "rolling " << format_double(demand_window_s) << " s peak "
      << (rolling_peak_w ? format_double(*rolling_peak_w) + " W" : std::string("n/a")) << "\n";
  out << "demand charge "
      << (demand_charge ? format_double(*demand_charge) : std::string("n/a")) << " at "
      << format_double(demand_rate_per_kw) << " per kW\n";
  out << "shed events " << shed_events.size() << ", dr events " << dr_events.size() << ", historian rows "
      << historian_rows << "\n";
  out << "messages:";
  for (const auto& [prefix, c] : message_counts) out << " " << prefix << "=" << c;
  out << "\n";
  for (const auto& line : logs) out << "log " << line << "\n";
  return out.str();
}

void write_report_artifacts(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  write_file(dir / "report.txt", report.to_text());

  std::ostringstream agg;
  agg << "t_s,power_w\n";
  for (std::size_t i = 0; i < report.aggregate.values.size(); ++i) {
    agg << format_double(report.aggregate.t0_s + static_cast<double>(i) * report.aggregate.dt_s) << ','
        << format_double(report.aggregate.values[i]) << '\n';
  }
  write_file(dir / "aggregate.csv", agg.str());

  for (const auto& d : report.devices) {
    std::ostringstream csv;
    csv << "t_s,power_w\n";
    for (std::size_t i = 0; i < d.power_w.size(); ++i) {
      csv << format_double(report.aggregate.t0_s + static_cast<double>(i) * report.aggregate.dt_s) << ','
          << format_double(d.power_w[i]) << '\n';
    }
    write_file(dir / ("power_" + d.id + ".csv"), csv.str());
  }
}

Json compare_reports(const RunReport& baseline, const RunReport& alternative) {
  auto side = [](const RunReport& r) {
    return Json{{"scenario", r.scenario},
                {"rolling_peak_w", opt_number(r.rolling_peak_w)},
                {"demand_charge", opt_number(r.demand_charge)},
                {"aggregate_energy_kwh", r.aggregate_energy_kwh}};
  };
  Json out{{"baseline", side(baseline)}, {"alternative", side(alternative)}};
  if (baseline.rolling_peak_w && alternative.rolling_peak_w) {
    out["peak_reduction_w"] = *baseline.rolling_peak_w - *alternative.rolling_peak_w;
    out["alternative_peak_not_higher"] = *alternative.rolling_peak_w <= *baseline.rolling_peak_w;
  }
  if (baseline.demand_charge && alternative.demand_charge) {
    out["charge_reduction"] = *baseline.demand_charge - *alternative.demand_charge;
  }
  return out;
}

std::string comparison_text(const Json& c) {
  auto num = [](const Json& v) { return v.is_number() ? format_double(v.get<double>()) : std::string("n/a"); };
  std::ostringstream out;
  out << "baseline     peak " << num(c["baseline"]["rolling_peak_w"]) << " W  charge "
      << num(c["baseline"]["demand_charge"]) << "  energy " << num(c["baseline"]["aggregate_energy_kwh"])
      << " kWh\n";
  out << "alternative  peak " << num(c["alternative"]["rolling_peak_w"]) << " W  charge "
      << num(c["alternative"]["demand_charge"]) << "  energy " << num(c["alternative"]["aggregate_energy_kwh"])
      << " kWh\n";
  if (c.contains("peak_reduction_w")) out << "peak reduction " << num(c["peak_reduction_w"]) << " W\n";
  return out.str();
}

}  // namespace plugsim::sim
