#include "solarcoop/time.hpp"

#include <cctype>
#include <cstdio>

#include "solarcoop/errors.hpp"

namespace solarcoop {

namespace {

using namespace std::chrono;

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  void advance() { ++pos_; }

  bool take(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  // Exactly `width` decimal digits.
  bool digits(int width, int& out) {
    if (pos_ + width > s_.size()) return false;
    int v = 0;
    for (int i = 0; i < width; ++i) {
      const char c = s_[pos_ + i];
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
      v = v * 10 + (c - '0');
    }
    pos_ += width;
    out = v;
    return true;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

[[noreturn]] void bad_stamp(std::string_view text, const char* why) {
  throw Error(ErrorKind::MalformedRow, "bad timestamp '" + std::string(text) + "': " + why);
}

// Parses an offset starting at the sign character. Returns false if the cursor
// is not at an offset.
bool parse_offset(Cursor& c, Duration& out, std::string_view text) {
  if (c.take('Z') || c.take('z')) {
    out = Duration{0};
    return true;
  }
  int sign = 0;
  if (c.take('+')) {
    sign = 1;
  } else if (c.take('-')) {
    sign = -1;
  } else {
    return false;
  }
  int hh = 0, mm = 0;
  if (!c.digits(2, hh)) bad_stamp(text, "offset hours");
  if (c.take(':')) {
    if (!c.digits(2, mm)) bad_stamp(text, "offset minutes");
  } else if (!c.done()) {
    if (!c.digits(2, mm)) bad_stamp(text, "offset minutes");
  }
  if (hh > 23 || mm > 59) bad_stamp(text, "offset out of range");
  out = Duration{sign * (hh * 3600 + mm * 60)};
  return true;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  Cursor c(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!c.digits(4, y) || !c.take('-') || !c.digits(2, mo) || !c.take('-') || !c.digits(2, d)) {
    bad_stamp(text, "expected YYYY-MM-DD");
  }
  if (!(c.take('T') || c.take(' ') || c.take('t'))) bad_stamp(text, "expected date/time separator");
  if (!c.digits(2, h) || !c.take(':') || !c.digits(2, mi)) bad_stamp(text, "expected HH:MM");
  if (c.take(':')) {
    if (!c.digits(2, s)) bad_stamp(text, "expected SS");
    if (c.take('.')) {
      // fractional seconds are accepted only when they are zero
      bool any = false;
      while (std::isdigit(static_cast<unsigned char>(c.peek()))) {
        if (c.peek() != '0') bad_stamp(text, "sub-second timestamps are not supported");
        c.advance();
        any = true;
      }
      if (!any) bad_stamp(text, "empty fraction");
    }
  }
  Duration offset{0};
  if (!c.done() && !parse_offset(c, offset, text)) bad_stamp(text, "trailing characters");
  if (!c.done()) bad_stamp(text, "trailing characters");

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) bad_stamp(text, "invalid calendar date");
  if (h > 23 || mi > 59 || s > 59) bad_stamp(text, "invalid time of day");

  const auto local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
  return Timestamp{local - offset};
}

std::string format_timestamp(Timestamp t) {
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

Duration parse_utc_offset(std::string_view text) {
  Cursor c(text);
  Duration out{0};
  if (!parse_offset(c, out, text) || !c.done()) {
    throw Error(ErrorKind::InvalidArgument, "bad UTC offset '" + std::string(text) + "'");
  }
  return out;
}

YearMonth parse_year_month(std::string_view text) {
  Cursor c(text);
  int y = 0, m = 0;
  if (!c.digits(4, y) || !c.take('-') || !c.digits(2, m) || !c.done() || m < 1 || m > 12) {
    throw Error(ErrorKind::InvalidArgument, "bad month '" + std::string(text) + "', expected YYYY-MM");
  }
  return {y, static_cast<unsigned>(m)};
}

std::string format_year_month(YearMonth ym) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", ym.year, ym.month);
  return buf;
}

Timestamp month_start(YearMonth ym, Duration utc_offset) {
  const sys_days first{year{ym.year} / month{ym.month} / day{1}};
  return Timestamp{first - utc_offset};
}

YearMonth month_of(Timestamp t, Duration utc_offset) {
  const year_month_day ymd{floor<days>(t + utc_offset)};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month())};
}

YearMonth next_month(YearMonth ym) {
  if (ym.month == 12) return {ym.year + 1, 1};
  return {ym.year, ym.month + 1};
}

}  // namespace solarcoop
