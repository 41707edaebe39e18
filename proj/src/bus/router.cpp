#include "plugsim/bus/router.hpp"

#include <set>

#include "plugsim/bus/topic.hpp"

namespace plugsim::bus {

std::vector<Delivery> route(const MessageEnvelope& publish,
                            std::span<const Subscription> subs) {
  std::set<ConnectionId> matched;
  for (const auto& sub : subs) {
    if (topic_matches(sub.pattern, publish.topic)) matched.insert(sub.subscriber);
  }
  std::vector<Delivery> out;
  out.reserve(matched.size());
  for (auto id : matched) out.push_back({id, publish});
  return out;
}

void SubscriptionTable::subscribe(const std::string& pattern, ConnectionId conn) {
  ++by_pattern_[pattern][conn];
  ++by_conn_[conn][pattern];
}

void SubscriptionTable::unsubscribe(const std::string& pattern, ConnectionId conn) {
  auto pit = by_pattern_.find(pattern);
  if (pit == by_pattern_.end()) return;
  auto sit = pit->second.find(conn);
  if (sit == pit->second.end()) return;
  if (--sit->second == 0) pit->second.erase(sit);
  if (pit->second.empty()) by_pattern_.erase(pit);

  auto& mine = by_conn_[conn];
  if (--mine[pattern] == 0) mine.erase(pattern);
  if (mine.empty()) by_conn_.erase(conn);
}

void SubscriptionTable::drop_connection(ConnectionId conn) {
  auto cit = by_conn_.find(conn);
  if (cit == by_conn_.end()) return;
  for (const auto& [pattern, count] : cit->second) {
    auto pit = by_pattern_.find(pattern);
    pit->second.erase(conn);
    if (pit->second.empty()) by_pattern_.erase(pit);
  }
  by_conn_.erase(cit);
}

std::vector<ConnectionId> SubscriptionTable::match(std::string_view topic) const {
  std::set<ConnectionId> hits;
  // Every candidate pattern is a segment prefix of the topic.
  std::size_t end = 0;
  while (true) {
    end = topic.find('/', end);
    auto prefix = topic.substr(0, end == std::string_view::npos ? topic.size() : end);
    if (auto it = by_pattern_.find(prefix); it != by_pattern_.end()) {
      for (const auto& [conn, count] : it->second) hits.insert(conn);
    }
    if (end == std::string_view::npos) break;
    ++end;
  }
  return {hits.begin(), hits.end()};
}

std::size_t SubscriptionTable::size() const noexcept {
  std::size_t n = 0;
  for (const auto& [conn, patterns] : by_conn_) {
    for (const auto& [pattern, count] : patterns) n += static_cast<std::size_t>(count);
  }
  return n;
}

std::vector<Subscription> SubscriptionTable::snapshot() const {
  std::vector<Subscription> out;
  for (const auto& [conn, patterns] : by_conn_) {
    for (const auto& [pattern, count] : patterns) {
      for (int i = 0; i < count; ++i) out.push_back({pattern, conn});
    }
  }
  return out;
}

}  // namespace plugsim::bus
