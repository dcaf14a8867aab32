#include "plugcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"
#include "plugcast/rng.hpp"

namespace plugcast {

namespace {

using nlohmann::json;

enum class NodeLevel { station, area, global };

NodeLevel classify_node(const std::string& name) {
  if (name == kGlobalNodeName) return NodeLevel::global;
  for (auto area : kAreaNames) {
    if (name == area) return NodeLevel::area;
  }
  return NodeLevel::station;
}

json level_json(double station, double area, double global) {
  return json{{"station", station}, {"area", area}, {"global", global}};
}

json state_json(const StateBreakdown& s) {
  return json{{"Available", s.available},
              {"Charging", s.charging},
              {"Passive", s.passive},
              {"Other", s.other}};
}

}  // namespace

ScoreReport hierarchical_loss(const ForecastPanel& truth, const ForecastPanel& pred) {
  if (truth.times != pred.times) {
    throw std::invalid_argument("hierarchical_loss: time axes differ");
  }
  if (truth.n_times() == 0) throw std::invalid_argument("hierarchical_loss: empty panels");
  std::vector<std::size_t> pred_index(truth.n_nodes());
  std::vector<NodeLevel> level(truth.n_nodes());
  bool has_global = false;
  for (std::size_t n = 0; n < truth.n_nodes(); ++n) {
    const int idx = pred.node_index(truth.nodes[n]);
    if (idx < 0) {
      throw std::invalid_argument("hierarchical_loss: prediction lacks node " + truth.nodes[n]);
    }
    pred_index[n] = static_cast<std::size_t>(idx);
    level[n] = classify_node(truth.nodes[n]);
    has_global = has_global || level[n] == NodeLevel::global;
  }
  if (!has_global) {
    throw std::invalid_argument("hierarchical_loss: truth panel lacks the global node");
  }

  ScoreReport report;
  report.n_timestamps = truth.n_times();
  report.per_timestamp.assign(truth.n_times(), 0.0);

  double* level_sum[3] = {&report.sum_by_level.station, &report.sum_by_level.area,
                          &report.sum_by_level.global};
  double* state_sum[kNumStates] = {&report.sum_by_state.available,
                                   &report.sum_by_state.charging,
                                   &report.sum_by_state.passive,
                                   &report.sum_by_state.other};

  for (std::size_t t = 0; t < truth.n_times(); ++t) {
    double here = 0.0;
    for (std::size_t n = 0; n < truth.n_nodes(); ++n) {
      const StateVector& a = truth.at(t, n);
      const StateVector& b = pred.at(t, pred_index[n]);
      for (std::size_t k = 0; k < kNumStates; ++k) {
        const double err = std::fabs(a[k] - b[k]);
        here += err;
        *level_sum[static_cast<int>(level[n])] += err;
        *state_sum[k] += err;
      }
    }
    report.per_timestamp[t] = here;
    report.sum_total += here;
  }

  const double inv_n = 1.0 / static_cast<double>(report.n_timestamps);
  report.mean_total = report.sum_total * inv_n;
  report.mean_by_level.station = report.sum_by_level.station * inv_n;
  report.mean_by_level.area = report.sum_by_level.area * inv_n;
  report.mean_by_level.global = report.sum_by_level.global * inv_n;
  report.mean_by_state.available = report.sum_by_state.available * inv_n;
  report.mean_by_state.charging = report.sum_by_state.charging * inv_n;
  report.mean_by_state.passive = report.sum_by_state.passive * inv_n;
  report.mean_by_state.other = report.sum_by_state.other * inv_n;
  return report;
}

std::string ScoreReport::to_json() const {
  json j;
  j["n_timestamps"] = n_timestamps;
  j["sum"] = {{"total", sum_total},
              {"by_level", level_json(sum_by_level.station, sum_by_level.area, sum_by_level.global)},
              {"by_state", state_json(sum_by_state)}};
  j["mean"] = {{"total", mean_total},
               {"by_level",
                level_json(mean_by_level.station, mean_by_level.area, mean_by_level.global)},
               {"by_state", state_json(mean_by_state)}};
  return j.dump(2) + "\n";
}

std::string ScoreReport::to_text() const {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "timestamps scored: %zu\n", n_timestamps);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "mean loss per timestamp: %.4f (station %.4f, area %.4f, global %.4f)\n",
                mean_total, mean_by_level.station, mean_by_level.area, mean_by_level.global);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "mean by state: Available %.4f, Charging %.4f, Passive %.4f, Other %.4f\n",
                mean_by_state.available, mean_by_state.charging, mean_by_state.passive,
                mean_by_state.other);
  out += buf;
  std::snprintf(buf, sizeof buf, "total loss (all timestamps): %.4f\n", sum_total);
  out += buf;
  return out;
}

ForecastPanel restrict_times(const ForecastPanel& fp, std::span<const Timestamp> keep) {
  ForecastPanel out;
  out.nodes = fp.nodes;
  for (Timestamp ts : keep) {
    const int t = fp.time_index(ts);
    if (t < 0) continue;
    out.times.push_back(ts);
    const std::size_t row = static_cast<std::size_t>(t) * fp.n_nodes();
    out.values.insert(out.values.end(), fp.values.begin() + static_cast<std::ptrdiff_t>(row),
                      fp.values.begin() + static_cast<std::ptrdiff_t>(row + fp.n_nodes()));
  }
  return out;
}

std::vector<LeaderboardRow> leaderboard(const std::vector<LeaderboardEntry>& entries,
                                        const ForecastPanel& truth) {
  std::vector<LeaderboardRow> rows;
  rows.reserve(entries.size());
  for (const auto& entry : entries) {
    const ScoreReport report = hierarchical_loss(truth, entry.panel);
    LeaderboardRow row;
    row.name = entry.name;
    row.by_state = report.mean_by_state;
    row.by_level = report.mean_by_level;
    row.total = report.mean_total;
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const LeaderboardRow& a, const LeaderboardRow& b) {
                     return a.total < b.total;
                   });
  return rows;
}

std::string leaderboard_to_text(const std::vector<LeaderboardRow>& rows) {
  std::string out;
  char buf[512];
  std::size_t name_width = 5;
  for (const auto& row : rows) name_width = std::max(name_width, row.name.size());
  std::snprintf(buf, sizeof buf,
                "%-*s %10s %10s %10s %10s %10s %10s %10s %10s\n",
                static_cast<int>(name_width), "model", "Available", "Charging", "Passive",
                "Other", "Station", "Area", "Global", "Total");
  out += buf;
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf,
                  "%-*s %10.3f %10.3f %10.3f %10.3f %10.3f %10.3f %10.3f %10.3f\n",
                  static_cast<int>(name_width), row.name.c_str(), row.by_state.available,
                  row.by_state.charging, row.by_state.passive, row.by_state.other,
                  row.by_level.station, row.by_level.area, row.by_level.global, row.total);
    out += buf;
  }
  return out;
}

std::string leaderboard_to_json(const std::vector<LeaderboardRow>& rows) {
  json arr = json::array();
  for (const auto& row : rows) {
    json j;
    j["model"] = row.name;
    j["by_state"] = state_json(row.by_state);
    j["by_level"] = level_json(row.by_level.station, row.by_level.area, row.by_level.global);
    j["total"] = row.total;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

BootstrapInterval bootstrap_ci(std::span<const double> per_timestamp, int n_resamples,
                               double level, std::uint64_t seed) {
  if (per_timestamp.empty()) throw std::invalid_argument("bootstrap_ci: empty sample");
  if (n_resamples < 1) throw std::invalid_argument("bootstrap_ci: need at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level outside (0,1)");

  const std::size_t n = per_timestamp.size();
  BootstrapInterval ci;
  for (double v : per_timestamp) ci.point += v;
  ci.point /= static_cast<double>(n);

  Rng rng(seed);
  std::vector<double> means(static_cast<std::size_t>(n_resamples));
  for (auto& m : means) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += per_timestamp[static_cast<std::size_t>(rng.below(static_cast<std::int64_t>(n)))];
    }
    m = total / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());

  const auto percentile = [&](double f) {
    const double pos = f * static_cast<double>(means.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return means[lo] + frac * (means[hi] - means[lo]);
  };
  const double alpha = 1.0 - level;
  ci.low = percentile(alpha / 2.0);
  ci.high = percentile(1.0 - alpha / 2.0);
  return ci;
}

}  // namespace plugcast
