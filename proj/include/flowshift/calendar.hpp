#pragma once

#include <cstdint>
#include <string_view>

#include "flowshift/time.hpp"

namespace flowshift {

// Inclusive range of local calendar dates.
struct DateInterval {
  Date first;
  Date last;

  bool contains(const Date& d) const { return first <= d && d <= last; }
  std::int64_t days() const { return days_since_epoch(last) - days_since_epoch(first) + 1; }
};

enum class Period { before, transition, after, outside };
enum class Hours { work, rest };

std::string_view to_string(Period p);
std::string_view to_string(Hours h);

struct StudyCalendar {
  DateInterval before{{2020, 2, 24}, {2020, 3, 13}};
  DateInterval transition{{2020, 3, 14}, {2020, 3, 30}};
  DateInterval after{{2020, 3, 31}, {2020, 5, 21}};
  // Work hours are [work_start_hour, work_end_hour) local time, Monday to Friday.
  int work_start_hour = 8;
  int work_end_hour = 17;
  // Local time = UTC + timezone_offset hours.
  int timezone_offset = -7;

  // Throws Error(input) unless the periods are disjoint, ordered and the
  // hour range is sane.
  void validate() const;

  Millis local(Millis utc) const { return utc + timezone_offset * kHour; }
  Date local_date(Millis utc) const { return date_from_days(floor_div(local(utc), kDay)); }
  // First instant (UTC) of a local date.
  Millis day_start_utc(const Date& d) const { return days_since_epoch(d) * kDay - timezone_offset * kHour; }

  // Observation window: first day of `before` through last day of `after`.
  Millis observation_start() const { return day_start_utc(before.first); }
  Millis observation_end() const { return day_start_utc(after.last) + kDay; }
};

struct Segment {
  Period period = Period::outside;
  Hours hours = Hours::rest;

  bool operator==(const Segment&) const = default;
};

Period period_of(const Date& local_date, const StudyCalendar& cal);
Hours hours_of(Millis t, const StudyCalendar& cal);
Segment segment(Millis t, const StudyCalendar& cal);

// 0 = Sunday ... 6 = Saturday for the local date containing t.
unsigned local_weekday(Millis t, const StudyCalendar& cal);

}  // namespace flowshift
