#include "plugsim/bus/envelope.hpp"

#include <cmath>

#include "plugsim/bus/topic.hpp"
#include "plugsim/error.hpp"

namespace plugsim::bus {

namespace {

constexpr std::string_view kKindNames[] = {"PUB", "SUB", "UNSUB", "PING", "PONG", "ERR"};

bool payload_is_finite(const Json& value) {
  switch (value.type()) {
    case Json::value_t::number_float:
      return std::isfinite(value.get<double>());
    case Json::value_t::array:
    case Json::value_t::object:
      for (const auto& item : value) {
        if (!payload_is_finite(item)) return false;
      }
      return true;
    default:
      return true;
  }
}

[[noreturn]] void malformed(std::string why) { throw Error(Errc::MalformedFrame, std::move(why)); }

std::string string_field(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (!it->is_string()) malformed(std::string(key) + " is not a string");
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(FrameKind kind) noexcept {
  return kKindNames[static_cast<int>(kind)];
}

std::optional<FrameKind> parse_frame_kind(std::string_view text) noexcept {
  for (int i = 0; i < 6; ++i) {
    if (kKindNames[i] == text) return static_cast<FrameKind>(i);
  }
  return std::nullopt;
}

MessageEnvelope make_pub(std::string topic, Json payload, std::string sender,
                         std::int64_t ts_ms, Headers headers) {
  MessageEnvelope msg;
  msg.kind = FrameKind::Pub;
  msg.topic = std::move(topic);
  msg.sender = std::move(sender);
  msg.ts_ms = ts_ms;
  msg.headers = std::move(headers);
  msg.payload = std::move(payload);
  return msg;
}

MessageEnvelope make_control(FrameKind kind, std::string sender, std::string pattern,
                             Headers headers) {
  MessageEnvelope msg;
  msg.kind = kind;
  msg.sender = std::move(sender);
  msg.pattern = std::move(pattern);
  msg.headers = std::move(headers);
  return msg;
}

void validate(const MessageEnvelope& msg) {
  if (msg.version != kProtocolVersion) {
    throw Error(Errc::InvalidEnvelope, "version must be 1");
  }
  const bool is_pub = msg.kind == FrameKind::Pub;
  const bool is_sub = msg.kind == FrameKind::Sub || msg.kind == FrameKind::Unsub;
  if (is_pub && msg.topic.empty()) throw Error(Errc::InvalidEnvelope, "PUB without topic");
  if (is_sub && msg.pattern.empty()) throw Error(Errc::InvalidEnvelope, "SUB/UNSUB without pattern");
  if (!msg.topic.empty() && !is_valid_topic(msg.topic)) {
    throw Error(Errc::InvalidEnvelope, "bad topic '" + msg.topic + "'");
  }
  if (!msg.pattern.empty() && !is_valid_topic(msg.pattern)) {
    throw Error(Errc::InvalidEnvelope, "bad pattern '" + msg.pattern + "'");
  }
  if (!payload_is_finite(msg.payload)) {
    throw Error(Errc::InvalidEnvelope, "non-finite number in payload");
  }
}

std::string encode_frame(const MessageEnvelope& msg) {
  validate(msg);
  // Fixed key order: v, kind, topic, pattern, sender, ts_ms, headers, payload.
  std::string out = "{\"v\":";
  out += std::to_string(msg.version);
  out += ",\"kind\":\"";
  out += to_string(msg.kind);
  out += '"';
  if (!msg.topic.empty()) out += ",\"topic\":" + Json(msg.topic).dump();
  if (!msg.pattern.empty()) out += ",\"pattern\":" + Json(msg.pattern).dump();
  out += ",\"sender\":" + Json(msg.sender).dump();
  out += ",\"ts_ms\":" + std::to_string(msg.ts_ms);
  if (!msg.headers.empty()) out += ",\"headers\":" + Json(msg.headers).dump();
  if (msg.kind == FrameKind::Pub || !msg.payload.is_null()) {
    out += ",\"payload\":" + msg.payload.dump();
  }
  out += "}\n";
  return out;
}

MessageEnvelope decode_frame(std::string_view bytes) {
  if (bytes.empty() || bytes.back() != '\n') malformed("record not newline-terminated");
  bytes.remove_suffix(1);
  if (bytes.find('\n') != std::string_view::npos) malformed("more than one record");
  if (bytes.size() > kMaxFrameBytes) malformed("frame exceeds 1 MiB");

  Json obj = Json::parse(bytes, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded()) malformed("not a valid interchange record");
  if (!obj.is_object()) malformed("record is not an object");

  auto v = obj.find("v");
  if (v == obj.end()) malformed("missing v");
  if (!v->is_number_integer()) malformed("v is not an integer");
  if (v->get<std::int64_t>() != kProtocolVersion) {
    throw Error(Errc::UnsupportedVersion, "v=" + v->dump());
  }

  MessageEnvelope msg;
  auto kind_it = obj.find("kind");
  if (kind_it == obj.end() || !kind_it->is_string()) malformed("missing kind");
  auto kind = parse_frame_kind(kind_it->get<std::string>());
  if (!kind) throw Error(Errc::InvalidEnvelope, "unknown kind " + kind_it->dump());
  msg.kind = *kind;

  msg.topic = string_field(obj, "topic");
  msg.pattern = string_field(obj, "pattern");
  msg.sender = string_field(obj, "sender");

  if (auto ts = obj.find("ts_ms"); ts != obj.end()) {
    if (!ts->is_number_integer()) malformed("ts_ms is not an integer");
    msg.ts_ms = ts->get<std::int64_t>();
  }
  if (auto hdr = obj.find("headers"); hdr != obj.end()) {
    if (!hdr->is_object()) malformed("headers is not an object");
    for (const auto& [key, value] : hdr->items()) {
      if (!value.is_string()) malformed("header '" + key + "' is not a string");
      msg.headers.emplace(key, value.get<std::string>());
    }
  }
  if (auto payload = obj.find("payload"); payload != obj.end()) {
    msg.payload = std::move(*payload);
  }
  validate(msg);
  return msg;
}

}  // namespace plugsim::bus
