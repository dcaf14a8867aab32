#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "plugcast/panel.hpp"

namespace plugcast {

// Expert forecasts aligned on the same nodes and times.
struct ExpertSet {
  std::vector<std::string> names;
  std::vector<ForecastPanel> panels;

  std::size_t size() const { return panels.size(); }
  // Throws unless every panel shares the first one's nodes and times.
  void validate() const;
};

ForecastPanel uniform_average(const ExpertSet& experts);

// Fixed convex combination; weights must be nonnegative and sum to 1
// within 1e-9.
ForecastPanel fixed_weight_average(const ExpertSet& experts, std::span<const double> weights);

// Preset mix for the usual trio of per-station experts, in expert order
// (seasonal profile, tree autoregression, category classifier).
inline constexpr std::array<double, 3> kStationTrioWeights{0.35, 0.25, 0.40};

// Polynomially weighted online aggregation for one scalar stream. Each
// step mixes the experts, observes the truth, and turns the per-expert
// regrets into new weights: eta_k = 1 / (1 + sum of squared regrets),
// w_k proportional to eta_k * max(cumulative regret, 0), falling back to
// uniform when no expert has positive regret.
struct MlpolState {
  std::vector<double> cum_regret;
  std::vector<double> cum_sq_regret;
  std::vector<double> weights;

  explicit MlpolState(std::size_t n_experts = 0) { reset(n_experts); }
  void reset(std::size_t n_experts);
};

// Returns the convex-combination prediction made before the update, then
// advances the state with the observed truth. Throws on non-finite input.
double mlpol_step(MlpolState& state, std::span<const double> expert_predictions, double truth);

struct WeightTraceRow {
  Timestamp ts{};
  std::string node;
  int state = 0;
  std::string expert;
  double weight = 0.0;
};

struct WeightTrace {
  std::vector<WeightTraceRow> rows;
  void write_csv(const std::filesystem::path& path) const;
};

enum class AggregationMode { online, fit_then_freeze };

struct AggregationResult {
  ForecastPanel panel;
  WeightTrace trace;
};

// Runs one MlpolState per (node, state) pair over the expert panels.
//
// online: walks the expert time axis in order; where the truth panel has
// the timestamp and the node is fully observed, the state updates after
// predicting, otherwise the step keeps its weights.
//
// fit_then_freeze: first replays the `fit_times` (which must be covered
// by both the experts and the truth) to learn weights, then applies the
// frozen weights to every expert timestamp. An empty fit window degrades
// to the uniform average.
//
// The trace records the weights after every update. Truth is given at
// station level; aggregate values for area and global nodes are derived
// per timestamp from fully observed members.
AggregationResult mlpol_aggregate(const ExpertSet& experts, const Panel& truth,
                                  AggregationMode mode,
                                  std::span<const Timestamp> fit_times = {});

}  // namespace plugcast
