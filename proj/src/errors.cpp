#include "solarcoop/errors.hpp"

namespace solarcoop {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::NegativeEnergy: return "NegativeEnergy";
    case ErrorKind::MixedResolution: return "MixedResolution";
    case ErrorKind::GapInSeries: return "GapInSeries";
    case ErrorKind::MisalignedGrid: return "MisalignedGrid";
    case ErrorKind::DuplicateHousehold: return "DuplicateHousehold";
    case ErrorKind::PeriodOutOfRange: return "PeriodOutOfRange";
    case ErrorKind::UnalignedBoundary: return "UnalignedBoundary";
    case ErrorKind::UnknownHousehold: return "UnknownHousehold";
    case ErrorKind::EmptyCoalition: return "EmptyCoalition";
    case ErrorKind::TooManyPlayers: return "TooManyPlayers";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidPrice: return "InvalidPrice";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IdentityViolation: return "IdentityViolation";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace solarcoop
