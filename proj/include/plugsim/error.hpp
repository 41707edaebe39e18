#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plugsim {

enum class Errc {
  InvalidEnvelope,
  MalformedFrame,
  UnsupportedVersion,
  AddressInUse,
  ConfigParse,
  ConfigInvalid,
  BusUnreachable,
  BusDisconnected,
  InvalidTopic,
  InvalidParams,
  UnknownPoint,
  ValueOutOfRange,
  CsvParse,
  NonFiniteValue,
  IoError,
  Infeasible,
  GuardExceeded,
  SeriesTooShort,
  EmptyHistorian,
  AgentStartupFailure,
  TickOverflow,
  CosimFault,
};

std::string_view to_string(Errc code) noexcept;

// Every failure the library reports is one of these; `code()` is the
// classification, `detail()` the field path or reason.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace plugsim
