#include "plugcast/panel.hpp"

#include <cmath>
#include <stdexcept>

namespace plugcast {

bool Panel::contiguous() const {
  for (std::size_t t = 1; t < times.size(); ++t) {
    if (times[t] - times[t - 1] != 1) return false;
  }
  return true;
}

int Panel::station_index(std::string_view id) const {
  for (std::size_t s = 0; s < stations.size(); ++s) {
    if (stations[s].id == id) return static_cast<int>(s);
  }
  return -1;
}

std::int64_t Panel::missing_count() const {
  std::int64_t n = 0;
  for (const auto& c : cells) {
    if (!c.has_value()) ++n;
  }
  return n;
}

Hierarchy::Hierarchy(std::vector<StationMeta> station_list)
    : stations(std::move(station_list)) {
  for (std::size_t s = 0; s < stations.size(); ++s) {
    area_members[static_cast<std::size_t>(stations[s].area)].push_back(static_cast<int>(s));
  }
}

std::vector<std::string> Hierarchy::node_names() const {
  std::vector<std::string> names;
  names.reserve(n_nodes());
  for (const auto& st : stations) names.push_back(st.id);
  for (auto name : kAreaNames) names.emplace_back(name);
  names.emplace_back(kGlobalNodeName);
  return names;
}

int ForecastPanel::node_index(std::string_view name) const {
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (nodes[n] == name) return static_cast<int>(n);
  }
  return -1;
}

int ForecastPanel::time_index(Timestamp ts) const {
  // Times are ascending; binary search.
  std::size_t lo = 0, hi = times.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (times[mid] < ts) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < times.size() && times[lo] == ts) return static_cast<int>(lo);
  return -1;
}

ForecastPanel aggregate(const Panel& panel, const Hierarchy& hierarchy) {
  if (panel.n_stations() != hierarchy.n_stations()) {
    throw std::invalid_argument("aggregate: panel and hierarchy station counts differ");
  }
  ForecastPanel fp;
  fp.nodes = hierarchy.node_names();
  fp.times = panel.times;
  fp.values.assign(panel.n_times() * hierarchy.n_nodes(), StateVector{});
  const std::size_t s_count = panel.n_stations();
  for (std::size_t t = 0; t < panel.n_times(); ++t) {
    for (std::size_t s = 0; s < s_count; ++s) {
      const auto& c = panel.cell(t, s);
      if (!c.has_value()) {
        throw std::invalid_argument("aggregate: missing observation at " +
                                    format_timestamp(panel.times[t]) + " station " +
                                    panel.stations[s].id);
      }
      fp.at(t, s) = *c;
    }
    StateVector global{};
    for (int a = 0; a < kNumAreas; ++a) {
      StateVector area_sum{};
      for (int s : hierarchy.area_members[static_cast<std::size_t>(a)]) {
        area_sum += fp.at(t, static_cast<std::size_t>(s));
      }
      fp.at(t, hierarchy.area_node(static_cast<Area>(a))) = area_sum;
      global += area_sum;
    }
    fp.at(t, hierarchy.global_node()) = global;
  }
  return fp;
}

std::vector<std::optional<StateVector>> aggregate_partial(const Panel& panel,
                                                          const Hierarchy& hierarchy,
                                                          std::size_t t) {
  std::vector<std::optional<StateVector>> out(hierarchy.n_nodes());
  for (std::size_t s = 0; s < panel.n_stations(); ++s) out[s] = panel.cell(t, s);
  bool all_areas = true;
  StateVector global{};
  for (int a = 0; a < kNumAreas; ++a) {
    StateVector area_sum{};
    bool defined = true;
    for (int s : hierarchy.area_members[static_cast<std::size_t>(a)]) {
      const auto& c = out[static_cast<std::size_t>(s)];
      if (!c.has_value()) {
        defined = false;
        break;
      }
      area_sum += *c;
    }
    if (defined) {
      out[hierarchy.area_node(static_cast<Area>(a))] = area_sum;
      global += area_sum;
    } else {
      all_areas = false;
    }
  }
  if (all_areas) out[hierarchy.global_node()] = global;
  return out;
}

CoherenceReport coherence_check(const ForecastPanel& fp, const Hierarchy& hierarchy,
                                double tolerance) {
  CoherenceReport report;
  report.tolerance = tolerance;
  const auto names = hierarchy.node_names();
  std::vector<std::size_t> index(names.size());
  for (std::size_t n = 0; n < names.size(); ++n) {
    const int idx = fp.node_index(names[n]);
    if (idx < 0) {
      throw std::invalid_argument("coherence_check: panel lacks node " + names[n]);
    }
    index[n] = static_cast<std::size_t>(idx);
  }
  for (std::size_t t = 0; t < fp.n_times(); ++t) {
    StateVector area_total{};
    for (int a = 0; a < kNumAreas; ++a) {
      StateVector members{};
      for (int s : hierarchy.area_members[static_cast<std::size_t>(a)]) {
        members += fp.at(t, index[static_cast<std::size_t>(s)]);
      }
      const StateVector& area = fp.at(t, index[hierarchy.area_node(static_cast<Area>(a))]);
      for (std::size_t k = 0; k < kNumStates; ++k) {
        report.max_area_deviation =
            std::max(report.max_area_deviation, std::fabs(area[k] - members[k]));
      }
      area_total += area;
    }
    const StateVector& global = fp.at(t, index[hierarchy.global_node()]);
    for (std::size_t k = 0; k < kNumStates; ++k) {
      report.max_global_deviation =
          std::max(report.max_global_deviation, std::fabs(global[k] - area_total[k]));
    }
  }
  report.pass = report.max_area_deviation <= tolerance &&
                report.max_global_deviation <= tolerance;
  return report;
}

}  // namespace plugcast
