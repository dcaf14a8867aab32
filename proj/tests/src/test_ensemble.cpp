#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <stdexcept>

#include "doctest.h"
#include "plugcast/ensemble.hpp"
#include "plugcast/rng.hpp"
#include "plugcast/text.hpp"
#include "plugcast/time.hpp"
#include "test_util.hpp"

using namespace plugcast;

namespace {

// Truth panel plus a set of expert forecast panels over the full
// hierarchy, each expert a noisy copy of the aggregated truth.
struct Fixture {
  Panel truth;
  Hierarchy hierarchy;
  ExpertSet experts;
};

Fixture make_fixture(std::size_t n_times, std::size_t n_experts, std::uint64_t seed) {
  Fixture fx;
  std::vector<StationMeta> stations = {make_station("st_1", Area::south),
                                       make_station("st_2", Area::north)};
  const Timestamp start = *parse_timestamp("2020-09-07 00:00");
  Rng rng(seed);
  fx.truth = make_panel(std::move(stations), start, n_times, [&](std::size_t t, std::size_t) {
    const int a = static_cast<int>((t / 3) % 4);
    return StateVector{{static_cast<double>(a), static_cast<double>(3 - a), 0.0, 0.0}};
  });
  fx.hierarchy = Hierarchy(fx.truth.stations);
  const ForecastPanel exact = aggregate(fx.truth, fx.hierarchy);
  for (std::size_t e = 0; e < n_experts; ++e) {
    ForecastPanel noisy = exact;
    for (auto& v : noisy.values) {
      for (std::size_t k = 0; k < 4; ++k) v[k] += 0.1 * (1.0 + static_cast<double>(e)) * rng.normal();
    }
    fx.experts.names.push_back("expert_" + std::to_string(e + 1));
    fx.experts.panels.push_back(std::move(noisy));
  }
  return fx;
}

double cumulative_abs_loss(std::span<const double> pred, std::span<const double> truth) {
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) total += std::fabs(pred[t] - truth[t]);
  return total;
}

}  // namespace

TEST_CASE("uniform and fixed averages match hand arithmetic") {
  Fixture fx = make_fixture(4, 2, 77);
  const ForecastPanel& a = fx.experts.panels[0];
  const ForecastPanel& b = fx.experts.panels[1];

  const ForecastPanel uni = uniform_average(fx.experts);
  const std::vector<double> w = {0.25, 0.75};
  const ForecastPanel fixed = fixed_weight_average(fx.experts, w);
  REQUIRE(uni.n_times() == a.n_times());
  for (std::size_t i = 0; i < uni.values.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      REQUIRE(uni.values[i][k] ==
              doctest::Approx(0.5 * a.values[i][k] + 0.5 * b.values[i][k]).epsilon(1e-12));
      REQUIRE(fixed.values[i][k] ==
              doctest::Approx(0.25 * a.values[i][k] + 0.75 * b.values[i][k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("fixed weights are validated") {
  Fixture fx = make_fixture(3, 2, 5);
  CHECK_THROWS_WITH_AS(
      fixed_weight_average(fx.experts, std::vector<double>{0.5, 0.6}),
      "fixed_weight_average: weights must sum to 1", std::invalid_argument);
  CHECK_THROWS_AS(fixed_weight_average(fx.experts, std::vector<double>{-0.2, 1.2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fixed_weight_average(fx.experts, std::vector<double>{1.0}),
                  std::invalid_argument);

  // The preset station-trio mix is a valid convex combination.
  double trio = 0.0;
  for (double v : kStationTrioWeights) trio += v;
  CHECK(trio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kStationTrioWeights[0] == 0.35);
  CHECK(kStationTrioWeights[1] == 0.25);
  CHECK(kStationTrioWeights[2] == 0.40);
}

TEST_CASE("expert sets must align nodes and times") {
  Fixture fx = make_fixture(3, 2, 6);
  fx.experts.panels[1].nodes[0] = "other";
  CHECK_THROWS_AS(fx.experts.validate(), std::invalid_argument);

  Fixture fx2 = make_fixture(3, 2, 6);
  fx2.experts.panels[1].times[0] = fx2.experts.panels[1].times[0] + 1;
  CHECK_THROWS_AS(fx2.experts.validate(), std::invalid_argument);

  ExpertSet empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("one aggregation step follows the regret arithmetic by hand") {
  MlpolState state(2);
  CHECK(state.weights == std::vector<double>{0.5, 0.5});

  // Step 1: mix predicts 1, truth 0. Expert 0 is spot on (regret +1),
  // expert 1 doubles the miss (regret -1): all mass moves to expert 0.
  const double p1 = mlpol_step(state, std::vector<double>{0.0, 2.0}, 0.0);
  CHECK(p1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(state.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(state.weights[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(state.cum_regret[0] == doctest::Approx(1.0));
  CHECK(state.cum_regret[1] == doctest::Approx(-1.0));

  // Step 2: the now-pure expert-0 mix misses by 2 while expert 1 is
  // exact; regrets (0, +2), learning rates 1/(1+2) and 1/(1+5).
  const double p2 = mlpol_step(state, std::vector<double>{0.0, 2.0}, 2.0);
  CHECK(p2 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(state.cum_regret[0] == doctest::Approx(1.0));
  CHECK(state.cum_regret[1] == doctest::Approx(1.0));
  CHECK(state.cum_sq_regret[0] == doctest::Approx(1.0));
  CHECK(state.cum_sq_regret[1] == doctest::Approx(5.0));
  CHECK(state.weights[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(state.weights[1] == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(mlpol_step(state, std::vector<double>{1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(
      mlpol_step(state, std::vector<double>{1.0, std::nan("")}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mlpol_step(state, std::vector<double>{1.0, 1.0}, std::nan("")),
                  std::invalid_argument);
}

TEST_CASE("online aggregation tracks the best of three experts") {
  // Stream with one clearly best expert: same-sign biases on the others
  // force the weights to concentrate rather than ride a lucky mixture.
  Rng rng(24601);
  const std::size_t n = 2000;
  std::vector<double> truth(n);
  std::vector<std::vector<double>> experts(3, std::vector<double>(n));
  for (std::size_t t = 0; t < n; ++t) {
    truth[t] = 5.0 + 2.0 * std::sin(static_cast<double>(t) / 15.0);
    experts[0][t] = truth[t] + rng.normal();        // best: unbiased
    experts[1][t] = truth[t] + 3.0 + 0.5 * rng.normal();
    experts[2][t] = truth[t] + 4.0 + 0.5 * rng.normal();
  }

  MlpolState state(3);
  std::vector<double> agg(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::vector<double> preds = {experts[0][t], experts[1][t], experts[2][t]};
    agg[t] = mlpol_step(state, preds, truth[t]);

    // Weights stay a probability vector after every update.
    double mass = 0.0;
    for (double w : state.weights) {
      REQUIRE(w >= 0.0);
      mass += w;
    }
    REQUIRE(mass == doctest::Approx(1.0).epsilon(1e-9));
  }

  const double own = cumulative_abs_loss(agg, truth);
  double best = cumulative_abs_loss(experts[0], truth);
  for (std::size_t e = 1; e < 3; ++e) {
    best = std::min(best, cumulative_abs_loss(experts[e], truth));
  }
  CHECK(own <= 1.05 * best);
  // The best expert ends up carrying almost all the weight.
  CHECK(state.weights[0] > 0.9);
}

TEST_CASE("aggregated loss never exceeds the weighted expert losses") {
  // |sum w_k p_k - y| <= sum w_k |p_k - y| for any probability vector, so
  // each step's realized loss is bounded by the mixture of expert losses
  // under the weights used for that prediction.
  Rng rng(13579);
  MlpolState state(4);
  for (int t = 0; t < 500; ++t) {
    const std::vector<double> weights_before = state.weights;
    std::vector<double> preds(4);
    for (auto& p : preds) p = rng.uniform(-5.0, 5.0);
    const double truth = rng.uniform(-5.0, 5.0);
    const double pred = mlpol_step(state, preds, truth);
    double bound = 0.0;
    for (std::size_t k = 0; k < 4; ++k) bound += weights_before[k] * std::fabs(preds[k] - truth);
    REQUIRE(std::fabs(pred - truth) <= bound + 1e-12);
  }
}

TEST_CASE("online panel aggregation skips nodes that are not fully observed") {
  Fixture fx = make_fixture(40, 2, 99);
  const Timestamp hole_ts = fx.truth.times[10];
  fx.truth.cell(10, 1) = std::nullopt;  // st_2 unobserved at t=10

  const AggregationResult result =
      mlpol_aggregate(fx.experts, fx.truth, AggregationMode::online);
  REQUIRE(result.panel.n_times() == 40);
  REQUIRE(result.panel.nodes == fx.experts.panels[0].nodes);

  // At the hole, st_2 and every aggregate containing it miss their
  // update; st_1 and its own area still record trace rows.
  std::set<std::string> updated;
  for (const auto& row : result.trace.rows) {
    if (row.ts == hole_ts) updated.insert(row.node);
  }
  CHECK(updated.count("st_1") == 1);
  CHECK(updated.count("south") == 1);
  CHECK(updated.count("st_2") == 0);
  CHECK(updated.count("north") == 0);
  CHECK(updated.count("global") == 0);

  // The first prediction is made before any update: exactly uniform.
  const ForecastPanel uni = uniform_average(fx.experts);
  for (std::size_t n = 0; n < result.panel.n_nodes(); ++n) {
    CHECK(result.panel.at(0, n) == uni.at(0, n));
  }
}

TEST_CASE("freeze mode with an empty fit window degrades to the uniform average") {
  Fixture fx = make_fixture(12, 3, 321);
  const AggregationResult result =
      mlpol_aggregate(fx.experts, fx.truth, AggregationMode::fit_then_freeze);
  const ForecastPanel uni = uniform_average(fx.experts);
  REQUIRE(result.panel.values.size() == uni.values.size());
  for (std::size_t i = 0; i < uni.values.size(); ++i) {
    REQUIRE(result.panel.values[i] == uni.values[i]);
  }
  CHECK(result.trace.rows.empty());
}

TEST_CASE("freeze mode applies the fitted weights across the whole horizon") {
  Fixture fx = make_fixture(60, 2, 4242);
  std::vector<Timestamp> window(fx.truth.times.begin(), fx.truth.times.begin() + 30);
  const AggregationResult frozen =
      mlpol_aggregate(fx.experts, fx.truth, AggregationMode::fit_then_freeze, window);

  // Per (node, state) the frozen panel is an exact convex combination of
  // the two experts with a single weight pair, at every timestamp.
  const ForecastPanel& a = fx.experts.panels[0];
  const ForecastPanel& b = fx.experts.panels[1];
  for (std::size_t n = 0; n < frozen.panel.n_nodes(); ++n) {
    for (std::size_t k = 0; k < 4; ++k) {
      // Recover the weight from the first timestamp, check the rest.
      const double pa = a.at(0, n)[k];
      const double pb = b.at(0, n)[k];
      const double mix = frozen.panel.at(0, n)[k];
      if (std::fabs(pa - pb) < 1e-9) continue;
      const double w = (mix - pb) / (pa - pb);
      REQUIRE(w >= -1e-9);
      REQUIRE(w <= 1.0 + 1e-9);
      for (std::size_t t = 1; t < frozen.panel.n_times(); ++t) {
        const double expect = w * a.at(t, n)[k] + (1.0 - w) * b.at(t, n)[k];
        REQUIRE(frozen.panel.at(t, n)[k] == doctest::Approx(expect).epsilon(1e-9));
      }
    }
  }

  // A window timestamp outside the truth panel is rejected.
  const std::vector<Timestamp> bad = {fx.truth.times.back() + 1000};
  CHECK_THROWS_WITH_AS(
      mlpol_aggregate(fx.experts, fx.truth, AggregationMode::fit_then_freeze, bad),
      doctest::Contains("not covered"), std::invalid_argument);
}

TEST_CASE("weight trace CSV has one row per (update, expert)") {
  Fixture fx = make_fixture(8, 2, 111);
  const AggregationResult result =
      mlpol_aggregate(fx.experts, fx.truth, AggregationMode::online);
  // 7 nodes x 4 states x 8 fully observed timestamps x 2 experts.
  CHECK(result.trace.rows.size() == 7u * 4u * 8u * 2u);

  TempDir dir;
  const auto path = dir.file("trace.csv");
  result.trace.write_csv(path);
  const std::string text = read_file(path);
  const auto lines = split(text, '\n');
  REQUIRE(lines.front() == "timestamp,node,state,expert,weight");
  // Trailing newline adds one empty field at the end of the split.
  CHECK(lines.size() == result.trace.rows.size() + 2);
  // Spot-check one row's shape.
  const auto fields = split(lines[1], ',');
  REQUIRE(fields.size() == 5);
  CHECK(parse_timestamp(fields[0]).has_value());
  CHECK(parse_double(fields[4]).has_value());
}
