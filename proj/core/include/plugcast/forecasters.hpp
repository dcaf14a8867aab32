#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "plugcast/arima.hpp"
#include "plugcast/gbt.hpp"
#include "plugcast/panel.hpp"
#include "plugcast/preprocess.hpp"

namespace plugcast {

// Recency weights for training timestamps: w(t) = exp((t - t_max) / tau)
// with tau converted from days to 15-minute steps. When the requested
// horizon is so much shorter than tau that every weight would differ from
// 1 by less than 1e-6, the exact uniform limit is returned instead, so an
// effectively infinite tau reproduces unweighted training bit for bit.
std::vector<double> exp_weights(std::span<const Timestamp> times, double tau_days,
                                Timestamp t_max);

struct FitOptions {
  // Per-timestamp sample weights aligned with the training panel's time
  // axis; empty means unweighted. Only the boosted-tree forecasters use
  // them; the seasonal profiles and the CSS-estimated recursions do not.
  std::vector<double> weights;
  HolidayCalendar holidays = HolidayCalendar::none();
  // Thread budget for families made of independent per-series or
  // per-target models. Results do not depend on it.
  int jobs = 1;
};

// Everything a fitted model must remember about its training panel to
// forecast consistently later: the station set fixes the hierarchy and
// feature ordinals, the origin keeps the trend covariate aligned, and
// train_end anchors recursive forecasts.
struct TrainInfo {
  int plugs = kPlugsPerStation;
  std::vector<StationMeta> stations;
  Timestamp origin{};
  Timestamp train_start{};
  Timestamp train_end{};
  HolidayCalendar holidays = HolidayCalendar::none();
  bool fitted = false;
};

// A forecaster fits on a station panel and emits its native fragment of
// the hierarchy: station-level families emit station nodes, aggregate
// families their own level, the seasonal profiles the whole tree. Use
// merge_fragments / fill_aggregates to assemble full panels.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  virtual std::string kind() const = 0;
  virtual void fit(const Panel& train, const FitOptions& options) = 0;
  // Times must be strictly ascending. Autoregressive families require
  // every time to lie after the training window.
  virtual ForecastPanel forecast(std::span<const Timestamp> times) const = 0;
  virtual void save(const std::filesystem::path& dir) const = 0;
  // Number of separately fitted estimators inside this forecaster.
  virtual std::size_t model_count() const = 0;

  const TrainInfo& info() const { return info_; }

 protected:
  TrainInfo info_;
};

// Per-(weekday, slot) profile of every hierarchy node. Empty buckets fall
// back to the node's all-sample statistic and the node is flagged.
class SeasonalProfileForecaster : public Forecaster {
 public:
  enum class Stat { median, mean };

  explicit SeasonalProfileForecaster(Stat stat = Stat::median) : stat_(stat) {}

  std::string kind() const override { return "seasonal"; }
  void fit(const Panel& train, const FitOptions& options) override;
  ForecastPanel forecast(std::span<const Timestamp> times) const override;
  void save(const std::filesystem::path& dir) const override;
  static std::unique_ptr<SeasonalProfileForecaster> load(const std::filesystem::path& dir);
  std::size_t model_count() const override { return node_names_.size(); }

  Stat stat() const { return stat_; }
  const std::vector<std::string>& fallback_nodes() const { return fallback_nodes_; }

 private:
  Stat stat_;
  std::vector<std::string> node_names_;
  // node * (4 * 7 * 96) + state * (7 * 96) + bucket
  std::vector<double> profile_;
  std::vector<std::string> fallback_nodes_;

  friend class ForecasterIO;
};

// One recursive CSS-estimated model per (station, state) on the smoothed
// series; forecasts run beyond the training window and areas are left to
// bottom-up assembly.
class ArimaForecaster : public Forecaster {
 public:
  explicit ArimaForecaster(int p = 2, int d = 1, int q = 1, int smooth_window = 10)
      : p_(p), d_(d), q_(q), smooth_window_(smooth_window) {}

  std::string kind() const override { return "arima"; }
  void fit(const Panel& train, const FitOptions& options) override;
  ForecastPanel forecast(std::span<const Timestamp> times) const override;
  void save(const std::filesystem::path& dir) const override;
  static std::unique_ptr<ArimaForecaster> load(const std::filesystem::path& dir);
  std::size_t model_count() const override { return params_.size(); }

  bool all_converged() const;
  const ArimaParams& params_at(std::size_t station, int state) const {
    return params_[station * kNumStates + static_cast<std::size_t>(state)];
  }

 private:
  struct SeriesState {
    std::vector<double> w_tail;      // last differenced values, oldest first
    std::vector<double> e_tail;      // last residuals, oldest first
    std::vector<double> level_tail;  // last value of each differencing level
  };

  int p_, d_, q_, smooth_window_;
  std::vector<ArimaParams> params_;     // station-major, state-minor
  std::vector<SeriesState> states_;

  friend class ForecasterIO;
};

// Gradient-boosted autoregression per (station, state): calendar features
// plus the previous n_lags values, forecast recursively step by step.
class TreeAutoregForecaster : public Forecaster {
 public:
  explicit TreeAutoregForecaster(int n_lags = 20, BoostConfig config = {})
      : n_lags_(n_lags), config_(config) {}

  std::string kind() const override { return "ar_tree"; }
  void fit(const Panel& train, const FitOptions& options) override;
  ForecastPanel forecast(std::span<const Timestamp> times) const override;
  void save(const std::filesystem::path& dir) const override;
  static std::unique_ptr<TreeAutoregForecaster> load(const std::filesystem::path& dir);
  std::size_t model_count() const override { return models_.size(); }

  int n_lags() const { return n_lags_; }

 private:
  int n_lags_;
  BoostConfig config_;
  std::vector<BoostedModel> models_;        // station-major, state-minor
  std::vector<std::vector<double>> tails_;  // last n_lags train values each

  friend class ForecasterIO;
};

// Single joint classifier over the 20-way category alphabet, pooling all
// stations with the station ordinal as a feature. Only defined for
// three-plug stations.
class CategoryClassifierForecaster : public Forecaster {
 public:
  explicit CategoryClassifierForecaster(BoostConfig config = {}) : config_(config) {}

  std::string kind() const override { return "classifier"; }
  void fit(const Panel& train, const FitOptions& options) override;
  ForecastPanel forecast(std::span<const Timestamp> times) const override;
  void save(const std::filesystem::path& dir) const override;
  static std::unique_ptr<CategoryClassifierForecaster> load(const std::filesystem::path& dir);
  std::size_t model_count() const override { return info_.fitted ? 1 : 0; }

 private:
  BoostConfig config_;
  BoostedModel model_;

  friend class ForecasterIO;
};

enum class HierarchyLevel { station, area, global };

HierarchyLevel parse_level(std::string_view name);
std::string_view level_name(HierarchyLevel level);

// Per-node chained regressions at the area or global level: the states
// are modeled in a fixed order, each later model seeing the earlier
// states' true values during fit and its chain predecessors' predictions
// during forecast.
class ChainForecaster : public Forecaster {
 public:
  explicit ChainForecaster(HierarchyLevel level = HierarchyLevel::area,
                           std::array<int, kNumStates> order = {0, 1, 2, 3},
                           BoostConfig config = {});

  std::string kind() const override { return "chain"; }
  void fit(const Panel& train, const FitOptions& options) override;
  ForecastPanel forecast(std::span<const Timestamp> times) const override;
  void save(const std::filesystem::path& dir) const override;
  static std::unique_ptr<ChainForecaster> load(const std::filesystem::path& dir);
  std::size_t model_count() const override { return models_.size(); }

  HierarchyLevel level() const { return level_; }
  const std::array<int, kNumStates>& order() const { return order_; }

 private:
  std::vector<std::string> target_nodes() const;

  HierarchyLevel level_;
  std::array<int, kNumStates> order_;
  BoostConfig config_;
  std::vector<BoostedModel> models_;  // node-major, chain-position-minor

  friend class ForecasterIO;
};

// Four regressors (one per state) pooled over every node of one level,
// with the node ordinal as a feature: the building block of the
// independent per-level layout.
class LevelRegressorForecaster : public Forecaster {
 public:
  explicit LevelRegressorForecaster(HierarchyLevel level = HierarchyLevel::station,
                                    BoostConfig config = {})
      : level_(level), config_(config) {}

  std::string kind() const override { return "level_gbt"; }
  void fit(const Panel& train, const FitOptions& options) override;
  ForecastPanel forecast(std::span<const Timestamp> times) const override;
  void save(const std::filesystem::path& dir) const override;
  static std::unique_ptr<LevelRegressorForecaster> load(const std::filesystem::path& dir);
  std::size_t model_count() const override { return models_.size(); }

  HierarchyLevel level() const { return level_; }

 private:
  std::vector<std::string> target_nodes() const;

  HierarchyLevel level_;
  BoostConfig config_;
  std::vector<BoostedModel> models_;  // one per state

  friend class ForecasterIO;
};

// Reads the manifest in `dir` and reconstructs the matching forecaster.
std::unique_ptr<Forecaster> load_forecaster(const std::filesystem::path& dir);

// Concatenates fragments sharing one time axis; node names must not
// collide.
ForecastPanel merge_fragments(const std::vector<ForecastPanel>& fragments);

// Completes a fragment to the full canonical node set: stations must all
// be present; a missing area is the sum of its member stations, a missing
// global the sum of the four areas.
ForecastPanel fill_aggregates(const ForecastPanel& fragment, const Hierarchy& hierarchy);

}  // namespace plugcast
