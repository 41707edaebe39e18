#include "plugsim/ingest/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"

namespace plugsim::ingest {

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    auto comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(begin));
      return out;
    }
    out.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

[[noreturn]] void parse_error(std::string_view origin, std::size_t lineno, std::string_view why) {
  throw Error(Errc::CsvParse, std::string(origin) + ":" + std::to_string(lineno) + ": " + std::string(why));
}

}  // namespace

std::vector<PointRecord> parse_point_csv(std::string_view text, std::string_view origin) {
  std::vector<PointRecord> rows;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto cols = split_commas(line);
    if (!header_seen) {
      header_seen = true;
      if (cols.size() < 3 || cols[0] != "ts_ms" || cols[1] != "topic" || cols[2] != "value" ||
          (cols.size() == 4 && cols[3] != "unit") || cols.size() > 4) {
        parse_error(origin, lineno, "header must be ts_ms,topic,value[,unit]");
      }
      continue;
    }
    if (cols.size() < 3 || cols.size() > 4) parse_error(origin, lineno, "expected 3 or 4 columns");
    PointRecord rec;
    auto ts = cols[0];
    auto [tp, tec] = std::from_chars(ts.data(), ts.data() + ts.size(), rec.ts_ms);
    if (tec != std::errc() || tp != ts.data() + ts.size()) parse_error(origin, lineno, "bad ts_ms");
    rec.topic = std::string(cols[1]);
    if (!bus::is_valid_topic(rec.topic)) parse_error(origin, lineno, "bad topic");
    auto val = cols[2];
    auto [vp, vec] = std::from_chars(val.data(), val.data() + val.size(), rec.value);
    if (vec != std::errc() || vp != val.data() + val.size()) parse_error(origin, lineno, "bad value");
    if (!std::isfinite(rec.value)) {
      throw Error(Errc::NonFiniteValue, std::string(origin) + ":" + std::to_string(lineno));
    }
    if (cols.size() == 4) rec.unit = std::string(cols[3]);
    rows.push_back(std::move(rec));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const PointRecord& a, const PointRecord& b) { return a.ts_ms < b.ts_ms; });
  return rows;
}

std::vector<PointRecord> read_point_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_point_csv(ss.str(), path.string());
}

void write_point_csv(const std::filesystem::path& path, const std::vector<PointRecord>& rows,
                     bool with_unit) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << (with_unit ? "ts_ms,topic,value,unit\n" : "ts_ms,topic,value\n");
  for (const auto& r : rows) {
    out << r.ts_ms << ',' << r.topic << ',' << format_double(r.value);
    if (with_unit) out << ',' << r.unit;
    out << '\n';
  }
  if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

PointCsvWriter::PointCsvWriter(const std::filesystem::path& path) : path_(path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(Errc::IoError, "cannot write " + path.string());
  out_ << "ts_ms,topic,value\n";
  out_.flush();
}

void PointCsvWriter::append(std::int64_t ts_ms, std::string_view topic, double value) {
  out_ << ts_ms << ',' << topic << ',' << format_double(value) << '\n';
  ++rows_;
  ++pending_;
}

void PointCsvWriter::flush() {
  out_.flush();
  pending_ = 0;
  if (!out_) throw Error(Errc::IoError, "write failed: " + path_.string());
}

}  // namespace plugsim::ingest
