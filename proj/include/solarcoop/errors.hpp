#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace solarcoop {

enum class ErrorKind {
  MalformedRow,
  NegativeEnergy,
  MixedResolution,
  GapInSeries,
  MisalignedGrid,
  DuplicateHousehold,
  PeriodOutOfRange,
  UnalignedBoundary,
  UnknownHousehold,
  EmptyCoalition,
  TooManyPlayers,
  DimensionMismatch,
  InvalidPrice,
  InvalidArgument,
  IdentityViolation,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for engine errors; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace solarcoop
