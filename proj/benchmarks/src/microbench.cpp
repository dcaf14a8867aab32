// Microbenchmarks for the hot paths: scoring, boosting, imputation, and
// online aggregation. Run via the plugcast_bench binary; sizes are picked
// so a full pass stays under a minute on one core.

#include <benchmark/benchmark.h>

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "plugcast/arima.hpp"
#include "plugcast/ensemble.hpp"
#include "plugcast/eval.hpp"
#include "plugcast/forecasters.hpp"
#include "plugcast/gbt.hpp"
#include "plugcast/matrix.hpp"
#include "plugcast/panel.hpp"
#include "plugcast/postprocess.hpp"
#include "plugcast/preprocess.hpp"
#include "plugcast/rng.hpp"
#include "plugcast/time.hpp"
#include "plugcast/types.hpp"

namespace {

using namespace plugcast;

// Fully observed fleet panel with a seasonal occupancy pattern.
Panel fleet_panel(int n_stations, std::size_t n_times) {
  Panel panel;
  for (int s = 0; s < n_stations; ++s) {
    panel.stations.push_back(StationMeta{"st_" + std::to_string(s), 48.0, 2.0,
                                         static_cast<Area>(s % kNumAreas)});
  }
  panel.origin = make_timestamp({2020, 7, 6, 0, 0, 0});
  for (std::size_t t = 0; t < n_times; ++t) {
    panel.times.push_back(panel.origin + static_cast<std::int64_t>(t));
  }
  panel.cells.assign(n_times * static_cast<std::size_t>(n_stations), std::nullopt);
  for (std::size_t t = 0; t < n_times; ++t) {
    for (std::size_t s = 0; s < static_cast<std::size_t>(n_stations); ++s) {
      const int busy = (time_of_day(panel.times[t]) < 48) ? 1 : 2;
      panel.cell(t, s) = StateVector{{static_cast<double>(3 - busy),
                                      static_cast<double>(busy), 0.0, 0.0}};
    }
  }
  return panel;
}

void BM_HierarchicalLoss(benchmark::State& state) {
  const Panel panel = fleet_panel(91, 500);
  const Hierarchy h(panel.stations);
  const ForecastPanel truth = aggregate(panel, h);
  ForecastPanel pred = truth;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    pred.values[i][0] += 0.25;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(hierarchical_loss(truth, pred).sum_total);
  }
}
BENCHMARK(BM_HierarchicalLoss);

void BM_AggregateFleet(benchmark::State& state) {
  const Panel panel = fleet_panel(91, 500);
  const Hierarchy h(panel.stations);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aggregate(panel, h).values.size());
  }
}
BENCHMARK(BM_AggregateFleet);

void BM_GbtFitRegressor(benchmark::State& state) {
  Rng rng(1);
  const std::size_t n = 2000;
  const std::size_t f = 10;
  Matrix x(n, f);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
    y[i] = std::sin(3.0 * x(i, 0)) + 0.5 * x(i, 1) + 0.1 * rng.normal();
  }
  BoostConfig cfg;
  cfg.rounds = 50;
  cfg.max_depth = 4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_regressor(x, y, {}, cfg).predict_one(x.row(0)));
  }
}
BENCHMARK(BM_GbtFitRegressor);

void BM_GbtPredict(benchmark::State& state) {
  Rng rng(2);
  const std::size_t n = 2000;
  Matrix x(n, 10);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 10; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
    y[i] = x(i, 0) * x(i, 1);
  }
  BoostConfig cfg;
  cfg.rounds = 50;
  cfg.max_depth = 4;
  const BoostedModel model = fit_regressor(x, y, {}, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(x).back());
  }
}
BENCHMARK(BM_GbtPredict);

void BM_EmwFill(benchmark::State& state) {
  Rng rng(3);
  std::vector<std::optional<double>> base(20000);
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (rng.uniform() < 0.3) continue;  // leave a gap
    base[i] = std::sin(static_cast<double>(i) / 50.0);
  }
  for (auto _ : state) {
    auto series = base;
    benchmark::DoNotOptimize(emw_fill(series, 8, 8).filled);
  }
}
BENCHMARK(BM_EmwFill);

void BM_MlpolStream(benchmark::State& state) {
  Rng rng(4);
  const int n = 5000;
  std::vector<std::array<double, 3>> preds(static_cast<std::size_t>(n));
  std::vector<double> truth(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    truth[static_cast<std::size_t>(t)] = std::sin(static_cast<double>(t) / 20.0);
    for (std::size_t k = 0; k < 3; ++k) {
      preds[static_cast<std::size_t>(t)][k] =
          truth[static_cast<std::size_t>(t)] + rng.normal() * (0.2 + 0.3 * static_cast<double>(k));
    }
  }
  for (auto _ : state) {
    MlpolState s(3);
    double total = 0.0;
    for (int t = 0; t < n; ++t) {
      total += mlpol_step(s, preds[static_cast<std::size_t>(t)],
                          truth[static_cast<std::size_t>(t)]);
    }
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_MlpolStream);

void BM_RoundRescale(benchmark::State& state) {
  Rng rng(5);
  std::vector<StateVector> inputs(4096);
  for (StateVector& v : inputs) {
    for (int k = 0; k < kNumStates; ++k) {
      v[static_cast<std::size_t>(k)] = rng.uniform(0.0, 3.0);
    }
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(round_rescale(inputs[i & 4095], 3).sum());
    ++i;
  }
}
BENCHMARK(BM_RoundRescale);

void BM_SeasonalFit(benchmark::State& state) {
  const Panel panel = fleet_panel(91, 4 * 7 * kStepsPerDay);
  for (auto _ : state) {
    SeasonalProfileForecaster m(SeasonalProfileForecaster::Stat::median);
    m.fit(panel, {});
    benchmark::DoNotOptimize(m.model_count());
  }
}
BENCHMARK(BM_SeasonalFit);

void BM_ArimaCss(benchmark::State& state) {
  Rng rng(6);
  std::vector<double> w(5000);
  double prev = 0.0;
  for (double& v : w) {
    prev = 0.6 * prev + rng.normal();
    v = prev;
  }
  const std::vector<double> phi{0.5, -0.3};
  const std::vector<double> theta{0.4};
  for (auto _ : state) {
    benchmark::DoNotOptimize(arima_css(w, phi, theta, 0.0));
  }
}
BENCHMARK(BM_ArimaCss);

}  // namespace

BENCHMARK_MAIN();
