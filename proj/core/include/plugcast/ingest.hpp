#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "plugcast/panel.hpp"

namespace plugcast {

struct IngestReport {
  std::int64_t rows_read = 0;
  std::int64_t cells_missing = 0;
  std::int64_t cells_rejected = 0;
  std::int64_t rows_duplicate = 0;
  Timestamp first_timestamp{};
  Timestamp last_timestamp{};

  std::string to_json() const;
};

struct ReadResult {
  Panel panel;
  IngestReport report;
};

// Reads a long-format station CSV with columns
//   datetime,area,Station,Latitude,Longitude,tod,dow,trend,
//   Available,Charging,Passive,Other
// The first column may also be named "date". Calendar covariates are
// recomputed from the datetime rather than trusted. Empty state fields
// mark the cell missing; rows whose states do not sum to the plug count
// (within 1e-6) are rejected into the report and stored as missing.
// Duplicate (datetime, station) rows keep the first occurrence. Throws
// std::runtime_error naming the offending line on malformed input.
ReadResult read_panel(const std::filesystem::path& path, int plugs = kPlugsPerStation);

// Writes the canonical long-format CSV, one row per (timestamp, station),
// stations in panel order within each timestamp.
void write_panel(const Panel& panel, const std::filesystem::path& path);

// Node-level forecast CSV: datetime,node,state,value with states in
// declaration order within each node.
void write_forecast_panel(const ForecastPanel& fp, const std::filesystem::path& path);
ForecastPanel read_forecast_panel(const std::filesystem::path& path);

// One timestamp per line.
void write_time_index(const std::vector<Timestamp>& times, const std::filesystem::path& path);
std::vector<Timestamp> read_time_index(const std::filesystem::path& path);

// Evaluation-period carve-up. The test range is split into three
// consecutive periods at the given boundaries; scoring pools are the
// first period plus a seeded random draw from the middle one (public),
// and the rest (private). Boundary convention: a period owns timestamps
// in [start, next boundary), the last owns its end.
struct SplitSpec {
  Timestamp train_start{};
  Timestamp train_end{};
  Timestamp test_start{};
  Timestamp test_end{};
  Timestamp middle_start{};  // boundary between periods 1 and 2
  Timestamp middle_end{};    // boundary between periods 2 and 3
  double public_middle_fraction = 0.2;
  std::uint64_t seed = 0;

  // Boundaries default to thirds of the test range when left unset.
  void resolve_defaults();
  void validate() const;

  std::string to_json() const;
  static SplitSpec from_json(const std::string& text);
  static SplitSpec load(const std::filesystem::path& path);
};

struct SplitResult {
  Panel train;
  std::vector<Timestamp> public_times;   // ascending
  std::vector<Timestamp> private_times;  // ascending
};

SplitResult make_splits(const Panel& panel, const SplitSpec& spec);

// Chronological head/tail split; the head keeps floor(fraction * n)
// timestamps.
std::pair<Panel, Panel> benchmark_split(const Panel& panel, double train_fraction);

// Synthetic occupancy generator: per-plug Markov chains with time-of-day
// and weekend modulation, plus station malfunctions that lock all plugs
// in one state and emit missing cells after the change point.
struct GeneratorConfig {
  int n_stations = 10;
  int plugs = kPlugsPerStation;
  Timestamp start = Timestamp{0};
  Timestamp end = Timestamp{0};  // inclusive
  std::array<std::array<double, kNumStates>, kNumStates> transition;
  double tod_amplitude = 0.8;
  double dow_amplitude = 0.4;
  double malfunction_probability = 0.1;
  Timestamp changepoint{};
  double missing_rate_after_changepoint = 0.3;
  std::uint64_t seed = 0;

  GeneratorConfig();
  void validate() const;

  std::string to_json() const;
  static GeneratorConfig from_json(const std::string& text);
  static GeneratorConfig load(const std::filesystem::path& path);
};

Panel generate(const GeneratorConfig& config);

}  // namespace plugcast
