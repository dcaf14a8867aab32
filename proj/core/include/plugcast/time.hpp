#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace plugcast {

// All clocks in this library are naive local civil time on a fixed
// 15-minute grid. A Timestamp counts 15-minute steps since
// 1970-01-01 00:00:00; no timezone or DST arithmetic is applied.
inline constexpr int kStepsPerDay = 96;
inline constexpr int kStepMinutes = 15;

struct Timestamp {
  std::int64_t step = 0;

  friend constexpr bool operator==(Timestamp a, Timestamp b) { return a.step == b.step; }
  friend constexpr auto operator<=>(Timestamp a, Timestamp b) { return a.step <=> b.step; }
  constexpr Timestamp operator+(std::int64_t n) const { return Timestamp{step + n}; }
  constexpr Timestamp operator-(std::int64_t n) const { return Timestamp{step - n}; }
  constexpr std::int64_t operator-(Timestamp other) const { return step - other.step; }
  Timestamp& operator+=(std::int64_t n) { step += n; return *this; }
};

struct CivilDateTime {
  int year = 1970;
  int month = 1;   // 1..12
  int day = 1;     // 1..31
  int hour = 0;    // 0..23
  int minute = 0;  // 0..59
  int second = 0;  // 0..59
};

bool leap_year(int year);

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

// Requires hour/minute on the 15-minute grid and second == 0; asserts in
// debug builds, callers validate user input beforehand.
Timestamp make_timestamp(const CivilDateTime& c);
CivilDateTime civil(Timestamp ts);

// Slot within the day, 0..95.
int time_of_day(Timestamp ts);
// ISO weekday, 1 = Monday .. 7 = Sunday.
int day_of_week(Timestamp ts);
// 1-based ordinal day within the year, 1..365 or 366.
int day_of_year(Timestamp ts);
// Days in the timestamp's year, 365 or 366.
int days_in_year(Timestamp ts);
int month_of(Timestamp ts);

// "YYYY-MM-DD HH:MM:SS".
std::string format_timestamp(Timestamp ts);

// Accepts "YYYY-MM-DD HH:MM" or "YYYY-MM-DD HH:MM:SS", with either a space
// or 'T' separating date and time. Returns nullopt if malformed, if the
// seconds field is nonzero, or if the minute is off the 15-minute grid.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// "YYYY-MM-DD" -> days since 1970-01-01.
std::optional<std::int64_t> parse_date(std::string_view text);
std::string format_date(std::int64_t days);

// Calendar covariates attached to one grid slot. trend counts steps since
// a panel-level origin so values stay comparable across splits.
struct TimeKey {
  Timestamp ts{};
  int tod = 0;            // 0..95
  int dow = 1;            // 1..7, Monday = 1
  std::int64_t trend = 0; // steps since origin
};

TimeKey make_time_key(Timestamp ts, Timestamp origin);

}  // namespace plugcast
