#include "plugsim/error.hpp"

namespace plugsim {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidEnvelope: return "InvalidEnvelope";
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::AddressInUse: return "AddressInUse";
    case Errc::ConfigParse: return "ConfigParse";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::BusUnreachable: return "BusUnreachable";
    case Errc::BusDisconnected: return "BusDisconnected";
    case Errc::InvalidTopic: return "InvalidTopic";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::UnknownPoint: return "UnknownPoint";
    case Errc::ValueOutOfRange: return "ValueOutOfRange";
    case Errc::CsvParse: return "CsvParse";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::IoError: return "IoError";
    case Errc::Infeasible: return "Infeasible";
    case Errc::GuardExceeded: return "GuardExceeded";
    case Errc::SeriesTooShort: return "SeriesTooShort";
    case Errc::EmptyHistorian: return "EmptyHistorian";
    case Errc::AgentStartupFailure: return "AgentStartupFailure";
    case Errc::TickOverflow: return "TickOverflow";
    case Errc::CosimFault: return "CosimFault";
  }
  return "Unknown";
}

Error::Error(Errc code, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace plugsim
