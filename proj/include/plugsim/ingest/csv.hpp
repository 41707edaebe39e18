#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace plugsim::ingest {

struct PointRecord {
  std::int64_t ts_ms = 0;
  std::string topic;
  double value = 0;
  std::string unit;  // empty when absent

  bool operator==(const PointRecord&) const = default;
};

// Shortest decimal that parses back to the same double.
std::string format_double(double value);

// `ts_ms,topic,value[,unit]` with header. Rows are returned sorted by ts_ms
// (stable). Throws CsvParse / NonFiniteValue with the 1-based line number.
std::vector<PointRecord> read_point_csv(const std::filesystem::path& path);
std::vector<PointRecord> parse_point_csv(std::string_view text, std::string_view origin = "csv");

void write_point_csv(const std::filesystem::path& path, const std::vector<PointRecord>& rows,
                     bool with_unit = false);

// Append-only `ts_ms,topic,value` writer used by the historian.
class PointCsvWriter {
 public:
  explicit PointCsvWriter(const std::filesystem::path& path);  // throws IoError
  void append(std::int64_t ts_ms, std::string_view topic, double value);
  void flush();  // throws IoError
  std::size_t rows_written() const noexcept { return rows_; }
  std::size_t pending() const noexcept { return pending_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t rows_ = 0;
  std::size_t pending_ = 0;
};

}  // namespace plugsim::ingest
