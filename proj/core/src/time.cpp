#include "plugcast/time.hpp"

#include <cassert>
#include <charconv>
#include <cstdio>

namespace plugcast {

bool leap_year(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);             // [0, 399]
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;            // [0, 146096]
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);          // [0, 146096]
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);          // [0, 365]
  const unsigned mp = (5 * doy + 2) / 153;                               // [0, 11]
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  year = static_cast<int>(y + (month <= 2));
}

Timestamp make_timestamp(const CivilDateTime& c) {
  assert(c.minute % kStepMinutes == 0 && c.second == 0);
  const std::int64_t days = days_from_civil(c.year, c.month, c.day);
  return Timestamp{days * kStepsPerDay + c.hour * 4 + c.minute / kStepMinutes};
}

CivilDateTime civil(Timestamp ts) {
  std::int64_t days = ts.step / kStepsPerDay;
  std::int64_t slot = ts.step % kStepsPerDay;
  if (slot < 0) {
    slot += kStepsPerDay;
    days -= 1;
  }
  CivilDateTime c;
  civil_from_days(days, c.year, c.month, c.day);
  c.hour = static_cast<int>(slot / 4);
  c.minute = static_cast<int>(slot % 4) * kStepMinutes;
  c.second = 0;
  return c;
}

int time_of_day(Timestamp ts) {
  std::int64_t slot = ts.step % kStepsPerDay;
  if (slot < 0) slot += kStepsPerDay;
  return static_cast<int>(slot);
}

int day_of_week(Timestamp ts) {
  std::int64_t days = ts.step / kStepsPerDay;
  if (ts.step % kStepsPerDay < 0) days -= 1;
  // 1970-01-01 was a Thursday.
  return static_cast<int>(((days % 7) + 7 + 3) % 7) + 1;
}

int day_of_year(Timestamp ts) {
  const CivilDateTime c = civil(ts);
  return static_cast<int>(days_from_civil(c.year, c.month, c.day) -
                          days_from_civil(c.year, 1, 1)) + 1;
}

int days_in_year(Timestamp ts) {
  return leap_year(civil(ts).year) ? 366 : 365;
}

int month_of(Timestamp ts) {
  return civil(ts).month;
}

std::string format_timestamp(Timestamp ts) {
  const CivilDateTime c = civil(ts);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d",
                c.year, c.month, c.day, c.hour, c.minute, c.second);
  return buf;
}

namespace {

bool parse_int_field(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc{} && ptr == first + len;
}

int month_length(int year, int month) {
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && leap_year(year)) return 29;
  return kDays[month - 1];
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  // YYYY-MM-DD{ |T}HH:MM[:SS]
  if (text.size() != 16 && text.size() != 19) return std::nullopt;
  CivilDateTime c;
  if (!parse_int_field(text, 0, 4, c.year) || text[4] != '-' ||
      !parse_int_field(text, 5, 2, c.month) || text[7] != '-' ||
      !parse_int_field(text, 8, 2, c.day)) {
    return std::nullopt;
  }
  if (text[10] != ' ' && text[10] != 'T') return std::nullopt;
  if (!parse_int_field(text, 11, 2, c.hour) || text[13] != ':' ||
      !parse_int_field(text, 14, 2, c.minute)) {
    return std::nullopt;
  }
  if (text.size() == 19) {
    if (text[16] != ':' || !parse_int_field(text, 17, 2, c.second)) return std::nullopt;
  }
  if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > month_length(c.year, c.month)) {
    return std::nullopt;
  }
  if (c.hour < 0 || c.hour > 23 || c.minute < 0 || c.minute > 59) return std::nullopt;
  if (c.second != 0 || c.minute % kStepMinutes != 0) return std::nullopt;
  return make_timestamp(c);
}

std::optional<std::int64_t> parse_date(std::string_view text) {
  if (text.size() != 10) return std::nullopt;
  int y, m, d;
  if (!parse_int_field(text, 0, 4, y) || text[4] != '-' ||
      !parse_int_field(text, 5, 2, m) || text[7] != '-' ||
      !parse_int_field(text, 8, 2, d)) {
    return std::nullopt;
  }
  if (m < 1 || m > 12 || d < 1 || d > month_length(y, m)) return std::nullopt;
  return days_from_civil(y, m, d);
}

std::string format_date(std::int64_t days) {
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return buf;
}

TimeKey make_time_key(Timestamp ts, Timestamp origin) {
  return TimeKey{ts, time_of_day(ts), day_of_week(ts), ts - origin};
}

}  // namespace plugcast
