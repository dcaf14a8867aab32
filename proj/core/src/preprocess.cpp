#include "plugcast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "plugcast/text.hpp"

namespace plugcast {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Weighted mean over up to `window` most recent entries of `recent`
// (most recent last), weights (1-alpha)^i with i = 0 at the newest.
double emw_mean(const std::vector<double>& recent, int window, double alpha) {
  const int m = std::min<int>(window, static_cast<int>(recent.size()));
  double num = 0.0, den = 0.0, w = 1.0;
  for (int i = 0; i < m; ++i) {
    num += w * recent[recent.size() - 1 - static_cast<std::size_t>(i)];
    den += w;
    w *= 1.0 - alpha;
  }
  return num / den;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

EmwFillResult emw_fill(std::vector<std::optional<double>>& series, int window, int span) {
  if (window < 1 || span < 1) throw std::invalid_argument("emw_fill: window and span must be >= 1");
  const double alpha = 2.0 / (span + 1.0);
  EmwFillResult result;

  bool any = false;
  for (const auto& v : series) any = any || v.has_value();
  if (!any) {
    result.no_observed_values = true;
    return result;
  }

  // Forward pass: fill the first `window` slots of each gap.
  {
    std::vector<double> recent;
    int gap_run = 0;
    for (auto& slot : series) {
      if (slot.has_value()) {
        recent.push_back(*slot);
        gap_run = 0;
        continue;
      }
      ++gap_run;
      if (gap_run <= window && !recent.empty()) {
        slot = emw_mean(recent, window, alpha);
        recent.push_back(*slot);
        ++result.filled;
      }
    }
  }
  // Backward pass over what is still missing: the slots nearest the right
  // edge of each remaining gap, filled from the right-hand context.
  {
    std::vector<double> recent;
    int gap_run = 0;
    for (std::size_t i = series.size(); i-- > 0;) {
      auto& slot = series[i];
      if (slot.has_value()) {
        recent.push_back(*slot);
        gap_run = 0;
        continue;
      }
      ++gap_run;
      if (gap_run <= window && !recent.empty()) {
        slot = emw_mean(recent, window, alpha);
        recent.push_back(*slot);
        ++result.filled;
      }
    }
  }
  return result;
}

ImputationStrategy ImputationStrategy::parse(std::string_view name) {
  ImputationStrategy s;
  if (name == "emw") {
    s.kind = Kind::emw;
  } else if (name == "station_mean") {
    s.kind = Kind::station_mean;
  } else if (name == "drop") {
    s.kind = Kind::drop;
  } else if (name == "seasonal_median_residual") {
    s.kind = Kind::seasonal_median_residual;
  } else {
    throw std::runtime_error("unknown imputation strategy '" + std::string(name) + "'");
  }
  return s;
}

std::string ImputeReport::to_json() const {
  nlohmann::json j;
  j["cells_missing_before"] = cells_missing_before;
  j["cells_filled"] = cells_filled;
  j["cells_missing_after"] = cells_missing_after;
  j["timestamps_dropped"] = timestamps_dropped;
  j["stations_all_missing"] = stations_all_missing;
  return j.dump(2) + "\n";
}

Panel impute(const Panel& panel, const ImputationStrategy& strategy, ImputeReport* report) {
  ImputeReport local;
  local.cells_missing_before = panel.missing_count();

  Panel out = panel;
  if (strategy.kind == ImputationStrategy::Kind::drop) {
    out = drop_missing(panel);
    local.timestamps_dropped =
        static_cast<std::int64_t>(panel.n_times() - out.n_times());
    local.cells_missing_after = 0;
    if (report) *report = local;
    return out;
  }

  const std::size_t n_t = out.n_times();
  for (std::size_t s = 0; s < out.n_stations(); ++s) {
    bool any = false;
    for (std::size_t t = 0; t < n_t && !any; ++t) any = out.cell(t, s).has_value();
    if (!any) {
      local.stations_all_missing.push_back(out.stations[s].id);
      continue;
    }

    if (strategy.kind == ImputationStrategy::Kind::emw) {
      std::array<std::vector<std::optional<double>>, kNumStates> series;
      for (int k = 0; k < kNumStates; ++k) {
        series[static_cast<std::size_t>(k)].resize(n_t);
        for (std::size_t t = 0; t < n_t; ++t) {
          const auto& c = out.cell(t, s);
          if (c.has_value()) {
            series[static_cast<std::size_t>(k)][t] = (*c)[static_cast<std::size_t>(k)];
          }
        }
        emw_fill(series[static_cast<std::size_t>(k)], strategy.window, strategy.span);
      }
      for (std::size_t t = 0; t < n_t; ++t) {
        if (out.cell(t, s).has_value()) continue;
        if (!series[0][t].has_value()) continue;  // all states fill the same slots
        StateVector v{};
        for (int k = 0; k < kNumStates; ++k) {
          v[static_cast<std::size_t>(k)] = *series[static_cast<std::size_t>(k)][t];
        }
        out.cell(t, s) = v;
        ++local.cells_filled;
      }
    } else if (strategy.kind == ImputationStrategy::Kind::station_mean) {
      StateVector mean{};
      std::int64_t n_obs = 0;
      for (std::size_t t = 0; t < n_t; ++t) {
        if (const auto& c = out.cell(t, s); c.has_value()) {
          mean += *c;
          ++n_obs;
        }
      }
      for (int k = 0; k < kNumStates; ++k) {
        mean[static_cast<std::size_t>(k)] /= static_cast<double>(n_obs);
      }
      for (std::size_t t = 0; t < n_t; ++t) {
        if (!out.cell(t, s).has_value()) {
          out.cell(t, s) = mean;
          ++local.cells_filled;
        }
      }
    } else {  // seasonal_median_residual
      // Per (dow, tod) bucket medians, all-time median as fallback.
      std::array<std::vector<std::vector<double>>, kNumStates> buckets;
      std::array<std::vector<double>, kNumStates> all;
      for (int k = 0; k < kNumStates; ++k) {
        buckets[static_cast<std::size_t>(k)].assign(7 * kStepsPerDay, {});
      }
      for (std::size_t t = 0; t < n_t; ++t) {
        const auto& c = out.cell(t, s);
        if (!c.has_value()) continue;
        const TimeKey key = out.key(t);
        const std::size_t b =
            static_cast<std::size_t>((key.dow - 1) * kStepsPerDay + key.tod);
        for (int k = 0; k < kNumStates; ++k) {
          buckets[static_cast<std::size_t>(k)][b].push_back((*c)[static_cast<std::size_t>(k)]);
          all[static_cast<std::size_t>(k)].push_back((*c)[static_cast<std::size_t>(k)]);
        }
      }
      std::array<double, kNumStates> fallback{};
      for (int k = 0; k < kNumStates; ++k) {
        fallback[static_cast<std::size_t>(k)] = median_of(all[static_cast<std::size_t>(k)]);
      }
      for (std::size_t t = 0; t < n_t; ++t) {
        if (out.cell(t, s).has_value()) continue;
        const TimeKey key = out.key(t);
        const std::size_t b =
            static_cast<std::size_t>((key.dow - 1) * kStepsPerDay + key.tod);
        StateVector v{};
        for (int k = 0; k < kNumStates; ++k) {
          const auto& bucket = buckets[static_cast<std::size_t>(k)][b];
          v[static_cast<std::size_t>(k)] =
              bucket.empty() ? fallback[static_cast<std::size_t>(k)] : median_of(bucket);
        }
        out.cell(t, s) = v;
        ++local.cells_filled;
      }
    }
  }

  local.cells_missing_after = out.missing_count();
  if (report) *report = local;
  return out;
}

Panel drop_missing(const Panel& panel) {
  Panel out;
  out.plugs = panel.plugs;
  out.stations = panel.stations;
  out.origin = panel.origin;
  for (std::size_t t = 0; t < panel.n_times(); ++t) {
    bool complete = true;
    for (std::size_t s = 0; s < panel.n_stations() && complete; ++s) {
      complete = panel.cell(t, s).has_value();
    }
    if (!complete) continue;
    out.times.push_back(panel.times[t]);
    for (std::size_t s = 0; s < panel.n_stations(); ++s) {
      out.cells.push_back(panel.cell(t, s));
    }
  }
  if (out.times.empty()) {
    throw std::runtime_error("drop_missing: no fully observed timestamps remain");
  }
  return out;
}

std::vector<double> rolling_smooth(std::span<const double> values, int window) {
  std::vector<double> out(values.begin(), values.end());
  if (window <= 1) return out;
  double running = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    running += values[t];
    if (t >= static_cast<std::size_t>(window)) {
      running -= values[t - static_cast<std::size_t>(window)];
      out[t] = running / window;
    } else {
      out[t] = running / static_cast<double>(t + 1);
    }
  }
  return out;
}

HolidayCalendar HolidayCalendar::none() { return HolidayCalendar{}; }

HolidayCalendar HolidayCalendar::french_2020_2021() {
  HolidayCalendar cal;
  for (const char* date : {"2020-07-14", "2020-08-15", "2020-11-01", "2020-11-11",
                           "2020-12-25", "2021-01-01"}) {
    cal.add(*parse_date(date));
  }
  return cal;
}

HolidayCalendar HolidayCalendar::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  HolidayCalendar cal;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty()) continue;
    const auto day = parse_date(stripped);
    if (!day) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad date");
    }
    cal.add(*day);
  }
  return cal;
}

bool HolidayCalendar::contains(Timestamp ts) const {
  std::int64_t days = ts.step / kStepsPerDay;
  if (ts.step % kStepsPerDay < 0) days -= 1;
  return days_.count(days) > 0;
}

std::vector<std::string> HolidayCalendar::to_dates() const {
  std::vector<std::string> out;
  out.reserve(days_.size());
  for (auto d : days_) out.push_back(format_date(d));
  return out;
}

Matrix featurize(std::span<const TimeKey> keys, const HolidayCalendar& holidays) {
  Matrix x(keys.size(), kCalendarFeatureCount);
  for (std::size_t r = 0; r < keys.size(); ++r) {
    const TimeKey& key = keys[r];
    const double tod_angle = kTwoPi * key.tod / kStepsPerDay;
    const double dow_angle = kTwoPi * (key.dow - 1) / 7.0;
    const double month_angle = kTwoPi * (month_of(key.ts) - 1) / 12.0;
    const double doy_angle =
        kTwoPi * (day_of_year(key.ts) - 1) / static_cast<double>(days_in_year(key.ts));
    x(r, 0) = std::sin(tod_angle);
    x(r, 1) = std::cos(tod_angle);
    x(r, 2) = std::sin(dow_angle);
    x(r, 3) = std::cos(dow_angle);
    x(r, 4) = std::sin(month_angle);
    x(r, 5) = std::cos(month_angle);
    x(r, 6) = std::sin(doy_angle);
    x(r, 7) = std::cos(doy_angle);
    x(r, 8) = holidays.contains(key.ts) ? 1.0 : 0.0;
    x(r, 9) = static_cast<double>(key.trend);
  }
  return x;
}

LagMatrix lag_matrix(std::span<const double> values, std::span<const std::int64_t> trend,
                     int n_lags) {
  if (values.size() != trend.size()) {
    throw std::invalid_argument("lag_matrix: values and trend lengths differ");
  }
  if (n_lags < 1) throw std::invalid_argument("lag_matrix: n_lags must be >= 1");

  std::vector<std::size_t> keep;
  for (std::size_t t = static_cast<std::size_t>(n_lags); t < values.size(); ++t) {
    // A usable row needs its whole lag window on consecutive steps.
    if (trend[t] - trend[t - static_cast<std::size_t>(n_lags)] ==
        static_cast<std::int64_t>(n_lags)) {
      keep.push_back(t);
    }
  }

  LagMatrix lm;
  lm.x = Matrix(keep.size(), static_cast<std::size_t>(n_lags));
  lm.y.reserve(keep.size());
  lm.row_time = keep;
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::size_t t = keep[r];
    for (int j = 1; j <= n_lags; ++j) {
      lm.x(r, static_cast<std::size_t>(j - 1)) = values[t - static_cast<std::size_t>(j)];
    }
    lm.y.push_back(values[t]);
  }
  return lm;
}

}  // namespace plugcast
