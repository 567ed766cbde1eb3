#include "flowshift/calendar.hpp"

#include "flowshift/error.hpp"

namespace flowshift {

std::string_view to_string(Period p) {
  switch (p) {
    case Period::before: return "before";
    case Period::transition: return "transition";
    case Period::after: return "after";
    case Period::outside: break;
  }
  return "outside";
}

std::string_view to_string(Hours h) { return h == Hours::work ? "work" : "rest"; }

void StudyCalendar::validate() const {
  for (const auto* iv : {&before, &transition, &after}) {
    if (iv->last < iv->first) throw input_error("calendar interval ends before it starts");
  }
  if (!(before.last < transition.first) || !(transition.last < after.first)) {
    throw input_error("calendar periods must be disjoint and ordered before < transition < after");
  }
  if (work_start_hour < 0 || work_end_hour > 24 || work_start_hour >= work_end_hour) {
    throw input_error("work hours must satisfy 0 <= start < end <= 24");
  }
  if (timezone_offset < -14 || timezone_offset > 14) throw input_error("timezone offset out of range");
}

Period period_of(const Date& d, const StudyCalendar& cal) {
  if (cal.before.contains(d)) return Period::before;
  if (cal.transition.contains(d)) return Period::transition;
  if (cal.after.contains(d)) return Period::after;
  return Period::outside;
}

unsigned local_weekday(Millis t, const StudyCalendar& cal) {
  // 1970-01-01 was a Thursday.
  std::int64_t days = floor_div(cal.local(t), kDay);
  return static_cast<unsigned>(((days + 4) % 7 + 7) % 7);
}

Hours hours_of(Millis t, const StudyCalendar& cal) {
  unsigned wd = local_weekday(t, cal);
  if (wd == 0 || wd == 6) return Hours::rest;
  Millis local = cal.local(t);
  auto hour = static_cast<int>((local - floor_div(local, kDay) * kDay) / kHour);
  return (hour >= cal.work_start_hour && hour < cal.work_end_hour) ? Hours::work : Hours::rest;
}

Segment segment(Millis t, const StudyCalendar& cal) {
  return {period_of(cal.local_date(t), cal), hours_of(t, cal)};
}

}  // namespace flowshift
