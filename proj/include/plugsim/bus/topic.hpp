#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace plugsim::bus {

// `[A-Za-z0-9_.-]+(/[A-Za-z0-9_.-]+)*`
bool is_valid_topic(std::string_view topic) noexcept;

// Whole-segment prefix match: pattern == topic, or topic starts with
// pattern + '/'.
bool topic_matches(std::string_view pattern, std::string_view topic) noexcept;

std::vector<std::string_view> split_topic(std::string_view topic);

// Throws Error(InvalidTopic).
void require_valid_topic(std::string_view topic);

}  // namespace plugsim::bus
