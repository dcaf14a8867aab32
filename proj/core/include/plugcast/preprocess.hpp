#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "plugcast/matrix.hpp"
#include "plugcast/panel.hpp"

namespace plugcast {

// Exponentially weighted fill of short gaps. The first `window` slots of
// a gap are filled left to right, each from the weighted mean of the
// `window` most recent values (observed or previously filled) with
// weights proportional to (1-alpha)^i, alpha = 2/(span+1), i = 0 for the
// most recent. The same rule then runs backward from the right edge over
// the last `window` slots of the gap; slots already filled forward keep
// their forward value. Interior slots of longer gaps stay missing.
struct EmwFillResult {
  int filled = 0;
  bool no_observed_values = false;
};
EmwFillResult emw_fill(std::vector<std::optional<double>>& series, int window = 8,
                       int span = 8);

struct ImputationStrategy {
  enum class Kind { emw, station_mean, drop, seasonal_median_residual };
  Kind kind = Kind::emw;
  int window = 8;
  int span = 8;

  static ImputationStrategy parse(std::string_view name);
};

struct ImputeReport {
  std::int64_t cells_missing_before = 0;
  std::int64_t cells_filled = 0;
  std::int64_t cells_missing_after = 0;
  std::int64_t timestamps_dropped = 0;
  std::vector<std::string> stations_all_missing;

  std::string to_json() const;
};

// Applies the strategy per station (all four states of a cell share the
// gap structure, so cells fill or stay missing as a unit):
//   emw: the gap fill above, per state series;
//   station_mean: every missing cell takes the station's per-state mean
//     over its observed cells;
//   seasonal_median_residual: every missing cell takes the station's
//     per-state median over observed cells in the same (dow, tod) bucket,
//     falling back to the all-time median when the bucket is empty;
//   drop: remove timestamps that still have any missing cell.
// Stations with no observed value at all are left missing and flagged.
Panel impute(const Panel& panel, const ImputationStrategy& strategy,
             ImputeReport* report = nullptr);

// Removes every timestamp with at least one missing cell. Throws
// std::runtime_error if nothing remains.
Panel drop_missing(const Panel& panel);

// Trailing moving average over the previous `window` values (including
// the current one); the first window-1 positions average what is
// available so far. window <= 1 returns the input unchanged.
std::vector<double> rolling_smooth(std::span<const double> values, int window);

class HolidayCalendar {
 public:
  static HolidayCalendar none();
  // Public holidays observed France-wide, mid 2020 through spring 2021.
  static HolidayCalendar french_2020_2021();
  // One YYYY-MM-DD date per line.
  static HolidayCalendar load(const std::filesystem::path& path);

  void add(std::int64_t day_number) { days_.insert(day_number); }
  bool contains(Timestamp ts) const;
  std::vector<std::string> to_dates() const;

 private:
  std::set<std::int64_t> days_;
};

// Calendar covariates encoded for trees: each cyclic quantity becomes a
// sine/cosine pair so midnight sits next to 23:45.
inline constexpr int kCalendarFeatureCount = 10;
inline constexpr const char* kCalendarFeatureNames[kCalendarFeatureCount] = {
    "tod_sin", "tod_cos", "dow_sin", "dow_cos", "month_sin",
    "month_cos", "doy_sin", "doy_cos", "is_holiday", "trend"};

Matrix featurize(std::span<const TimeKey> keys, const HolidayCalendar& holidays);

// Supervised lag layout for one scalar series: row t has the n_lags
// previous values as columns (lag 1 first) and value[t] as target. Rows
// whose lag window crosses a gap in the trend column are excluded, so
// discontinuous panels never produce rows that mix regimes.
struct LagMatrix {
  Matrix x;
  std::vector<double> y;
  std::vector<std::size_t> row_time;  // index into the input series per row
};

LagMatrix lag_matrix(std::span<const double> values, std::span<const std::int64_t> trend,
                     int n_lags);

}  // namespace plugcast
