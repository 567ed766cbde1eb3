#include "flowshift/time.hpp"

#include <charconv>
#include <cstdio>

#include "flowshift/error.hpp"

namespace flowshift {
namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw input_error("truncated timestamp '" + std::string(text) + "'");
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc() || ptr != first + len) {
    throw input_error("bad digits in '" + std::string(text) + "'");
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, std::string_view allowed) {
  if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos) {
    throw input_error("malformed timestamp '" + std::string(text) + "'");
  }
}

}  // namespace

std::int64_t days_since_epoch(const Date& d) {
  using namespace std::chrono;
  year_month_day ymd{year{d.year}, month{d.month}, day{d.day}};
  if (!ymd.ok()) throw input_error("invalid calendar date " + format_date(d));
  return sys_days{ymd}.time_since_epoch().count();
}

Date date_from_days(std::int64_t days) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  return Date{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
              static_cast<unsigned>(ymd.day())};
}

Date parse_date(std::string_view text) {
  if (text.size() != 10) throw input_error("malformed date '" + std::string(text) + "'");
  expect(text, 4, "-");
  expect(text, 7, "-");
  Date d{read_int(text, 0, 4), static_cast<unsigned>(read_int(text, 5, 2)),
         static_cast<unsigned>(read_int(text, 8, 2))};
  days_since_epoch(d);  // validates
  return d;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

Millis parse_timestamp(std::string_view text) {
  if (text.size() < 19) throw input_error("malformed timestamp '" + std::string(text) + "'");
  Date d = parse_date(text.substr(0, 10));
  expect(text, 10, "T ");
  expect(text, 13, ":");
  expect(text, 16, ":");
  int hh = read_int(text, 11, 2);
  int mm = read_int(text, 14, 2);
  int ss = read_int(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) {
    throw input_error("time of day out of range in '" + std::string(text) + "'");
  }
  std::size_t pos = 19;
  int ms = 0;
  if (pos < text.size() && text[pos] == '.') {
    std::size_t start = ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    std::size_t digits = pos - start;
    if (digits == 0 || digits > 9) throw input_error("bad fraction in '" + std::string(text) + "'");
    // Keep millisecond precision; further digits are truncated.
    for (std::size_t i = 0; i < 3; ++i) {
      ms = ms * 10 + (i < digits ? text[start + i] - '0' : 0);
    }
  }
  if (pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size()) throw input_error("trailing characters in timestamp '" + std::string(text) + "'");
  return days_since_epoch(d) * kDay + hh * kHour + mm * kMinute + ss * kSecond + ms;
}

std::string format_timestamp(Millis t) {
  std::int64_t days = floor_div(t, kDay);
  Millis rem = t - days * kDay;
  Date d = date_from_days(days);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", d.year, d.month,
                d.day, static_cast<long long>(rem / kHour),
                static_cast<long long>(rem / kMinute % 60),
                static_cast<long long>(rem / kSecond % 60), static_cast<long long>(rem % kSecond));
  return buf;
}

}  // namespace flowshift
