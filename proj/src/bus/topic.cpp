#include "plugsim/bus/topic.hpp"

#include "plugsim/error.hpp"

namespace plugsim::bus {

namespace {

bool is_segment_char(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
}

}  // namespace

bool is_valid_topic(std::string_view topic) noexcept {
  if (topic.empty()) return false;
  bool segment_open = false;
  for (char c : topic) {
    if (c == '/') {
      if (!segment_open) return false;
      segment_open = false;
    } else if (is_segment_char(c)) {
      segment_open = true;
    } else {
      return false;
    }
  }
  return segment_open;
}

bool topic_matches(std::string_view pattern, std::string_view topic) noexcept {
  if (pattern.size() > topic.size()) return false;
  if (topic.substr(0, pattern.size()) != pattern) return false;
  return pattern.size() == topic.size() || topic[pattern.size()] == '/';
}

std::vector<std::string_view> split_topic(std::string_view topic) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (begin <= topic.size()) {
    auto end = topic.find('/', begin);
    if (end == std::string_view::npos) end = topic.size();
    out.push_back(topic.substr(begin, end - begin));
    begin = end + 1;
  }
  return out;
}

void require_valid_topic(std::string_view topic) {
  if (!is_valid_topic(topic)) {
    throw Error(Errc::InvalidTopic, "'" + std::string(topic) + "'");
  }
}

}  // namespace plugsim::bus
