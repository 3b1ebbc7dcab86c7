#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace solarcoop {

using Timestamp = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

// Parses ISO-8601 "YYYY-MM-DD[T| ]HH:MM[:SS][Z|+HH[:MM]|-HH[MM]]" and
// normalizes to UTC. A stamp without an offset is taken as UTC.
// Throws Error(MalformedRow) on anything else.
Timestamp parse_timestamp(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp t);

// Parses "+HH:MM", "-HH:MM", "+HH", "Z" into a signed offset.
Duration parse_utc_offset(std::string_view text);

struct YearMonth {
  int year = 0;
  unsigned month = 0;

  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

// "YYYY-MM"
YearMonth parse_year_month(std::string_view text);
std::string format_year_month(YearMonth ym);

// UTC instant of local midnight on the first day of `ym` for a fixed offset.
Timestamp month_start(YearMonth ym, Duration utc_offset);

// Local calendar month containing the UTC instant `t`.
YearMonth month_of(Timestamp t, Duration utc_offset);

YearMonth next_month(YearMonth ym);

}  // namespace solarcoop
