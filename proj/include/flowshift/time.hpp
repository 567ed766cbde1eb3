#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace flowshift {

// Milliseconds since the Unix epoch, UTC.
using Millis = std::int64_t;

inline constexpr Millis kSecond = 1000;
inline constexpr Millis kMinute = 60 * kSecond;
inline constexpr Millis kHour = 60 * kMinute;
inline constexpr Millis kDay = 24 * kHour;

// Parses "YYYY-MM-DDTHH:MM:SS[.fff][Z]" (a space is accepted in place of T).
// Throws Error(input) on malformed text.
Millis parse_timestamp(std::string_view text);

// Canonical form: "YYYY-MM-DDTHH:MM:SS.fffZ".
std::string format_timestamp(Millis t);

// Calendar date, no time zone attached.
struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  auto operator<=>(const Date&) const = default;
};

Date parse_date(std::string_view text);
std::string format_date(const Date& d);

// Days since 1970-01-01 for the date.
std::int64_t days_since_epoch(const Date& d);
Date date_from_days(std::int64_t days);

// Floor division that rounds toward negative infinity.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace flowshift
