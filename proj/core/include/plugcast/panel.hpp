#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "plugcast/time.hpp"
#include "plugcast/types.hpp"

namespace plugcast {

// Station-level observations on a shared time axis. Cells are stored
// row-major by time; an empty optional is a missing observation (all four
// states of a station are observed or missing together).
struct Panel {
  int plugs = kPlugsPerStation;
  std::vector<StationMeta> stations;
  std::vector<Timestamp> times;  // strictly ascending, not necessarily contiguous
  Timestamp origin{};            // reference point for the trend covariate
  std::vector<std::optional<StateVector>> cells;  // times.size() * stations.size()

  std::size_t n_times() const { return times.size(); }
  std::size_t n_stations() const { return stations.size(); }

  std::optional<StateVector>& cell(std::size_t t, std::size_t s) {
    return cells[t * stations.size() + s];
  }
  const std::optional<StateVector>& cell(std::size_t t, std::size_t s) const {
    return cells[t * stations.size() + s];
  }

  TimeKey key(std::size_t t) const { return make_time_key(times[t], origin); }

  // True when consecutive timestamps are exactly one step apart.
  bool contiguous() const;
  // Index of a station id, -1 if absent.
  int station_index(std::string_view id) const;
  std::int64_t missing_count() const;
};

// Station -> area -> global tree. Node order is fixed: the panel's
// stations first, then the four areas in declaration order, then global.
// All four areas are present even when no station maps to one.
struct Hierarchy {
  std::vector<StationMeta> stations;
  std::array<std::vector<int>, kNumAreas> area_members;

  Hierarchy() = default;
  explicit Hierarchy(std::vector<StationMeta> station_list);

  std::size_t n_stations() const { return stations.size(); }
  std::size_t n_nodes() const { return stations.size() + kNumAreas + 1; }

  std::size_t area_node(Area a) const { return stations.size() + static_cast<std::size_t>(a); }
  std::size_t global_node() const { return stations.size() + kNumAreas; }
  bool is_station_node(std::size_t node) const { return node < stations.size(); }

  std::vector<std::string> node_names() const;
};

// Real-valued state vectors for every hierarchy node on a shared time
// axis, row-major by time. Forecasters covering only part of the tree
// emit a panel whose node list is that subset.
struct ForecastPanel {
  std::vector<std::string> nodes;
  std::vector<Timestamp> times;
  std::vector<StateVector> values;  // times.size() * nodes.size()

  std::size_t n_times() const { return times.size(); }
  std::size_t n_nodes() const { return nodes.size(); }

  StateVector& at(std::size_t t, std::size_t n) { return values[t * nodes.size() + n]; }
  const StateVector& at(std::size_t t, std::size_t n) const {
    return values[t * nodes.size() + n];
  }

  int node_index(std::string_view name) const;
  int time_index(Timestamp ts) const;
};

// Bottom-up roll-up of a fully observed panel: area nodes sum their
// member stations, the global node sums the areas. Throws
// std::invalid_argument naming the first missing (timestamp, station).
ForecastPanel aggregate(const Panel& panel, const Hierarchy& hierarchy);

// Like aggregate, but a node's value at a timestamp is defined only when
// every member station is observed there; undefined nodes are nullopt.
std::vector<std::optional<StateVector>> aggregate_partial(const Panel& panel,
                                                          const Hierarchy& hierarchy,
                                                          std::size_t t);

struct CoherenceReport {
  double max_area_deviation = 0.0;
  double max_global_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Checks that every area node equals the sum of its member stations and
// the global node equals the sum of the areas, within tolerance. The
// panel must contain all hierarchy nodes.
CoherenceReport coherence_check(const ForecastPanel& fp, const Hierarchy& hierarchy,
                                double tolerance = 1e-9);

}  // namespace plugcast
