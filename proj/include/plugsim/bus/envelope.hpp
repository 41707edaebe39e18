#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace plugsim::bus {

using Json = nlohmann::json;
using Headers = std::map<std::string, std::string>;

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 1u << 20;

enum class FrameKind { Pub, Sub, Unsub, Ping, Pong, Err };

std::string_view to_string(FrameKind kind) noexcept;
std::optional<FrameKind> parse_frame_kind(std::string_view text) noexcept;

// One bus message. `topic` is meaningful for PUB only, `pattern` for
// SUB/UNSUB only; an empty string means the field is absent.
struct MessageEnvelope {
  int version = kProtocolVersion;
  FrameKind kind = FrameKind::Pub;
  std::string topic;
  std::string pattern;
  std::string sender;
  std::int64_t ts_ms = 0;
  Headers headers;
  Json payload;

  bool operator==(const MessageEnvelope&) const = default;
};

MessageEnvelope make_pub(std::string topic, Json payload, std::string sender,
                         std::int64_t ts_ms, Headers headers = {});
MessageEnvelope make_control(FrameKind kind, std::string sender,
                             std::string pattern = {}, Headers headers = {});

// Throws Error(InvalidEnvelope) when an invariant does not hold.
void validate(const MessageEnvelope& msg);

// Canonical newline-terminated record. Throws InvalidEnvelope.
std::string encode_frame(const MessageEnvelope& msg);

// Parses exactly one newline-terminated record. Throws MalformedFrame,
// InvalidEnvelope or UnsupportedVersion.
MessageEnvelope decode_frame(std::string_view bytes);

}  // namespace plugsim::bus
