#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "plugsim/bus/envelope.hpp"

namespace plugsim::bus {

using ConnectionId = std::uint64_t;

struct Subscription {
  std::string pattern;
  ConnectionId subscriber = 0;
};

struct Delivery {
  ConnectionId subscriber = 0;
  MessageEnvelope message;

  bool operator==(const Delivery&) const = default;
};

// Pure routing rule: one delivery per distinct subscriber with at least one
// matching pattern, ordered by subscriber id.
std::vector<Delivery> route(const MessageEnvelope& publish,
                            std::span<const Subscription> subs);

// Indexed subscription state used by the broker. Lookup walks the topic's
// segment prefixes instead of scanning every subscription.
class SubscriptionTable {
 public:
  void subscribe(const std::string& pattern, ConnectionId conn);
  // Removes one SUB of `pattern`; no-op when there is none.
  void unsubscribe(const std::string& pattern, ConnectionId conn);
  void drop_connection(ConnectionId conn);

  // Distinct subscribers matching `topic`, ascending.
  std::vector<ConnectionId> match(std::string_view topic) const;

  std::size_t size() const noexcept;
  std::vector<Subscription> snapshot() const;

 private:
  // pattern -> subscriber -> SUB count
  std::map<std::string, std::map<ConnectionId, int>, std::less<>> by_pattern_;
  std::map<ConnectionId, std::map<std::string, int>> by_conn_;
};

}  // namespace plugsim::bus
