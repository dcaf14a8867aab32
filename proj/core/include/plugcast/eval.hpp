#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plugcast/panel.hpp"

namespace plugcast {

struct LevelBreakdown {
  double station = 0.0;
  double area = 0.0;
  double global = 0.0;
};

struct StateBreakdown {
  double available = 0.0;
  double charging = 0.0;
  double passive = 0.0;
  double other = 0.0;
};

// Hierarchical L1 score: at each timestamp the absolute errors over every
// (node, state) pair are summed across the station, area, and global
// levels. Sums decompose exactly by level and by state; the mean blocks
// divide the sums by the timestamp count.
struct ScoreReport {
  std::size_t n_timestamps = 0;
  std::vector<double> per_timestamp;  // total loss at each timestamp

  double sum_total = 0.0;
  LevelBreakdown sum_by_level;
  StateBreakdown sum_by_state;

  double mean_total = 0.0;
  LevelBreakdown mean_by_level;
  StateBreakdown mean_by_state;

  std::string to_json() const;
  std::string to_text() const;
};

// Both panels must cover the same full node set (stations plus the four
// areas and global, identified by name) on the same time axis. Node
// levels are read off the reserved names.
ScoreReport hierarchical_loss(const ForecastPanel& truth, const ForecastPanel& pred);

// Restriction of a panel to the times in `keep` (intersection, order
// preserved).
ForecastPanel restrict_times(const ForecastPanel& fp, std::span<const Timestamp> keep);

struct LeaderboardEntry {
  std::string name;
  ForecastPanel panel;
};

struct LeaderboardRow {
  std::string name;
  StateBreakdown by_state;  // mean per timestamp
  LevelBreakdown by_level;  // mean per timestamp
  double total = 0.0;       // mean per timestamp
};

// Scores every entry against the truth panel and sorts ascending by
// total. Entries must share the truth panel's nodes and times.
std::vector<LeaderboardRow> leaderboard(const std::vector<LeaderboardEntry>& entries,
                                        const ForecastPanel& truth);

std::string leaderboard_to_text(const std::vector<LeaderboardRow>& rows);
std::string leaderboard_to_json(const std::vector<LeaderboardRow>& rows);

struct BootstrapInterval {
  double point = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// Percentile bootstrap for the mean of per-timestamp losses: resamples
// the vector with replacement, takes each resample's mean, and reads the
// interval off the sorted means with linear interpolation.
BootstrapInterval bootstrap_ci(std::span<const double> per_timestamp, int n_resamples = 1000,
                               double level = 0.95, std::uint64_t seed = 0);

}  // namespace plugcast
