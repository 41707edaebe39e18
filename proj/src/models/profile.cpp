#include "plugsim/models/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "plugsim/error.hpp"

namespace plugsim::models {

double TimeProfile::at(double t_s) const {
  if (samples.empty()) return 0.0;
  if (repeat_daily) {
    t_s = std::fmod(t_s, 86400.0);
    if (t_s < 0) t_s += 86400.0;
  }
  if (t_s < samples.front().first || t_s > samples.back().first) return 0.0;
  auto hi = std::lower_bound(samples.begin(), samples.end(), t_s,
                             [](const auto& s, double t) { return s.first < t; });
  if (hi->first == t_s) return hi->second;
  auto lo = std::prev(hi);
  double frac = (t_s - lo->first) / (hi->first - lo->first);
  return lo->second + frac * (hi->second - lo->second);
}

void TimeProfile::validate(double lo, double hi) const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& [t, v] = samples[i];
    if (!std::isfinite(t) || !std::isfinite(v)) throw Error(Errc::InvalidParams, "profile sample not finite");
    if (v < lo || v > hi) throw Error(Errc::InvalidParams, "profile value out of range");
    if (i > 0 && !(t > samples[i - 1].first)) throw Error(Errc::InvalidParams, "profile times not increasing");
  }
}

TimeProfile TimeProfile::from_json(const nlohmann::json& j) {
  TimeProfile p;
  const nlohmann::json* rows = &j;
  if (j.is_object()) {
    p.repeat_daily = j.value("repeat_daily", false);
    auto it = j.find("samples");
    if (it == j.end()) throw Error(Errc::ConfigInvalid, "profile.samples");
    rows = &*it;
  }
  if (!rows->is_array()) throw Error(Errc::ConfigInvalid, "profile");
  for (const auto& row : *rows) {
    if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
      throw Error(Errc::ConfigInvalid, "profile row must be [seconds, value]");
    }
    p.samples.emplace_back(row[0].get<double>(), row[1].get<double>());
  }
  return p;
}

TimeProfile TimeProfile::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  TimeProfile p;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(Errc::CsvParse, path.string() + ":" + std::to_string(lineno));
    char* end = nullptr;
    double t = std::strtod(line.c_str(), &end);
    if (end != line.c_str() + comma) {
      if (lineno == 1) continue;  // header
      throw Error(Errc::CsvParse, path.string() + ":" + std::to_string(lineno));
    }
    double v = std::strtod(line.c_str() + comma + 1, &end);
    if (end == line.c_str() + comma + 1) throw Error(Errc::CsvParse, path.string() + ":" + std::to_string(lineno));
    p.samples.emplace_back(t, v);
  }
  return p;
}

}  // namespace plugsim::models
