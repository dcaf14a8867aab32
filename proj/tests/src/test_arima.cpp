#include <cmath>
#include <vector>

#include <stdexcept>

#include "doctest.h"
#include "plugcast/arima.hpp"
#include "plugcast/nelder_mead.hpp"
#include "plugcast/rng.hpp"

using namespace plugcast;

namespace {

// Simulates w_t = c + sum phi_i w_{t-i} + e_t + sum theta_j e_{t-j} with
// standard normal shocks, discarding a burn-in prefix.
std::vector<double> simulate_arma(const std::vector<double>& phi,
                                  const std::vector<double>& theta, double c,
                                  std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t burn = 200;
  std::vector<double> w(n + burn, 0.0);
  std::vector<double> e(n + burn, 0.0);
  for (std::size_t t = 0; t < w.size(); ++t) {
    e[t] = rng.normal();
    double v = c + e[t];
    for (std::size_t i = 0; i < phi.size(); ++i) {
      if (t > i) v += phi[i] * w[t - 1 - i];
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
      if (t > j) v += theta[j] * e[t - 1 - j];
    }
    w[t] = v;
  }
  return std::vector<double>(w.begin() + burn, w.end());
}

}  // namespace

TEST_CASE("difference removes polynomial trend order by order") {
  const std::vector<double> series = {1, 3, 6, 10};
  CHECK(difference(series, 0) == series);
  CHECK(difference(series, 1) == std::vector<double>{2, 3, 4});
  CHECK(difference(series, 2) == std::vector<double>{1, 1});
  CHECK_THROWS_AS(difference(series, -1), std::invalid_argument);
  CHECK_THROWS_AS(difference(std::vector<double>{1}, 1), std::invalid_argument);
}

TEST_CASE("stationarity and invertibility regions") {
  CHECK(ar_stationary(std::vector<double>{}));
  CHECK(ar_stationary(std::vector<double>{0.95}));
  CHECK_FALSE(ar_stationary(std::vector<double>{1.05}));
  CHECK(ar_stationary(std::vector<double>{0.5, -0.3}));
  CHECK(ar_stationary(std::vector<double>{-1.2, -0.3}));       // inside all three edges
  CHECK_FALSE(ar_stationary(std::vector<double>{0.6, 0.5}));   // phi1 + phi2 >= 1
  CHECK_FALSE(ar_stationary(std::vector<double>{-0.8, 0.3}));  // phi2 - phi1 >= 1
  CHECK_FALSE(ar_stationary(std::vector<double>{0.0, 1.1}));   // |phi2| >= 1
  CHECK_FALSE(ar_stationary(std::vector<double>{0.1, 0.1, 0.1}));  // order cap

  CHECK(ma_invertible(std::vector<double>{0.4}));
  CHECK_FALSE(ma_invertible(std::vector<double>{-1.01}));
  CHECK(ma_invertible(std::vector<double>{0.3, 0.2}));
  CHECK_FALSE(ma_invertible(std::vector<double>{1.5, 0.6}));
}

TEST_CASE("conditional sum of squares matches a hand recursion") {
  // w = (1, 2, 0.5, 3), phi = 0.5, theta = 0.2, c = 0.1:
  //   e1 = 2 - (0.1 + 0.5*1)            = 1.4
  //   e2 = 0.5 - (0.1 + 0.5*2 + 0.2*e1) = -0.88
  //   e3 = 3 - (0.1 + 0.25 + 0.2*e2)    = 2.826
  const std::vector<double> w = {1, 2, 0.5, 3};
  const std::vector<double> phi = {0.5};
  const std::vector<double> theta = {0.2};
  const double expected = 1.4 * 1.4 + 0.88 * 0.88 + 2.826 * 2.826;
  CHECK(arima_css(w, phi, theta, 0.1) == doctest::Approx(expected).epsilon(1e-12));

  // Pure AR: presample residuals are zero, the sum starts at t = p.
  CHECK(arima_css(std::vector<double>{1, 2}, phi, {}, 0.0) ==
        doctest::Approx(1.5 * 1.5).epsilon(1e-12));

  CHECK_THROWS_AS(arima_css(std::vector<double>{1}, phi, theta, 0.0),
                  std::invalid_argument);
}

TEST_CASE("fitting a constant series gives zero error and flat forecasts") {
  // The differenced series is identically zero, so the CSS surface is
  // flat in phi and theta; only zero error and constant forecasts are
  // pinned down, not the coefficients themselves.
  const std::vector<double> series(200, 7.5);
  const ArimaParams params = fit_arima(series, 2, 1, 1);
  CHECK(params.converged);
  CHECK(params.css < 1e-10);
  CHECK(std::fabs(params.intercept) < 1e-6);
  const auto fc = arima_forecast(params, series, 20);
  for (double v : fc) CHECK(v == doctest::Approx(7.5).epsilon(1e-6));
}

TEST_CASE("white noise fits stay near zero for identified models") {
  Rng rng(8080);
  std::vector<double> noise(5000);
  for (auto& v : noise) v = rng.normal();

  const ArimaParams ar = fit_arima(noise, 2, 0, 0);
  for (double c : ar.phi) CHECK(std::fabs(c) < 0.15);

  const ArimaParams ma = fit_arima(noise, 0, 0, 1);
  for (double c : ma.theta) CHECK(std::fabs(c) < 0.15);
}

TEST_CASE("simulated ARMA(2,1) coefficients are recovered") {
  const std::vector<double> phi = {0.5, -0.3};
  const std::vector<double> theta = {0.4};
  const double c = 0.2;
  const std::vector<double> series = simulate_arma(phi, theta, c, 4000, 616);

  const ArimaParams params = fit_arima(series, 2, 0, 1);
  REQUIRE(params.phi.size() == 2);
  REQUIRE(params.theta.size() == 1);
  CHECK(std::fabs(params.phi[0] - phi[0]) < 0.1);
  CHECK(std::fabs(params.phi[1] - phi[1]) < 0.1);
  CHECK(std::fabs(params.theta[0] - theta[0]) < 0.1);
  CHECK(std::fabs(params.intercept - c) < 0.1);
  CHECK(ar_stationary(params.phi));
  CHECK(ma_invertible(params.theta));
}

TEST_CASE("AR(1) forecasts follow the closed-form recursion") {
  ArimaParams params;
  params.p = 1;
  params.d = 0;
  params.q = 0;
  params.phi = {0.5};
  params.theta = {};
  params.intercept = 0.2;
  const std::vector<double> history = {7.0, 2.0};
  const auto fc = arima_forecast(params, history, 3);
  REQUIRE(fc.size() == 3);
  CHECK(fc[0] == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(fc[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(fc[2] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("MA(1) forecasts use the last residual once, then the mean") {
  ArimaParams params;
  params.p = 0;
  params.d = 0;
  params.q = 1;
  params.phi = {};
  params.theta = {0.4};
  params.intercept = 0.0;
  // Single observation, zero presample: its residual is the value itself.
  const std::vector<double> history = {5.0};
  const auto fc = arima_forecast(params, history, 3);
  REQUIRE(fc.size() == 3);
  CHECK(fc[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fc[1] == doctest::Approx(0.0));
  CHECK(fc[2] == doctest::Approx(0.0));
}

TEST_CASE("differenced forecasts integrate back to levels") {
  ArimaParams params;
  params.p = 1;
  params.d = 1;
  params.q = 0;
  params.phi = {0.5};
  params.theta = {};
  params.intercept = 0.0;
  const std::vector<double> history = {0.0, 0.0, 2.0};  // last increment 2
  const auto fc = arima_forecast(params, history, 3);
  REQUIRE(fc.size() == 3);
  CHECK(fc[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fc[1] == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(fc[2] == doctest::Approx(3.75).epsilon(1e-12));
}

TEST_CASE("long-horizon forecasts flatten out") {
  std::vector<double> stationary = simulate_arma({0.6, -0.2}, {0.3}, 0.0, 2000, 99);
  // Remove the sample drift so the integrated path is trend-free; the
  // fitted intercept then stays near zero and far forecasts go flat.
  double mean = 0.0;
  for (double v : stationary) mean += v;
  mean /= static_cast<double>(stationary.size());
  for (double& v : stationary) v -= mean;
  // Integrate once so the model needs d = 1.
  std::vector<double> series(stationary.size() + 1, 10.0);
  for (std::size_t i = 0; i < stationary.size(); ++i) {
    series[i + 1] = series[i] + stationary[i];
  }
  const ArimaParams params = fit_arima(series, 2, 1, 1);
  const auto fc = arima_forecast(params, series, 1920);
  REQUIRE(fc.size() == 1920);
  for (std::size_t h = 1820; h < 1920; ++h) {
    REQUIRE(std::fabs(fc[h] - fc[h - 1]) < 1e-3);
  }
  for (double v : fc) REQUIRE(std::isfinite(v));
}

TEST_CASE("forecasting from a saved tail matches forecasting from history") {
  const std::vector<double> series = simulate_arma({0.5, -0.3}, {0.4}, 0.1, 500, 3030);
  const ArimaParams params = fit_arima(series, 2, 0, 1);

  const ArimaState state = arima_state(params, series);
  REQUIRE(state.w_tail.size() == 2);
  REQUIRE(state.e_tail.size() == 1);
  REQUIRE(state.level_tail.empty());

  const auto from_history = arima_forecast(params, series, 64);
  const auto from_state = arima_forecast_from(params, state, 64);
  REQUIRE(from_history.size() == from_state.size());
  for (std::size_t h = 0; h < from_state.size(); ++h) {
    REQUIRE(from_state[h] == from_history[h]);
  }

  // Longer horizons extend shorter ones without changing the prefix.
  const auto longer = arima_forecast(params, series, 128);
  for (std::size_t h = 0; h < 64; ++h) REQUIRE(longer[h] == from_history[h]);
}

TEST_CASE("forecast and fit guard rails") {
  ArimaParams params;
  params.p = 1;
  params.d = 0;
  params.q = 0;
  params.phi = {0.5};
  const std::vector<double> history = {1.0, 2.0};
  CHECK(arima_forecast(params, history, 0).empty());
  CHECK_THROWS_AS(arima_forecast(params, history, -1), std::invalid_argument);

  ArimaState bad;
  bad.w_tail = {1.0, 2.0};  // wrong AR order
  CHECK_THROWS_AS(arima_forecast_from(params, bad, 4), std::invalid_argument);

  std::vector<double> series(300, 0.0);
  CHECK_THROWS_AS(fit_arima(series, 3, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(fit_arima(series, 0, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(fit_arima(std::vector<double>(30, 1.0), 1, 0, 0), std::invalid_argument);
}

TEST_CASE("parameter JSON round trip") {
  ArimaParams params;
  params.p = 2;
  params.d = 1;
  params.q = 1;
  params.phi = {0.25, -0.125};
  params.theta = {0.5};
  params.intercept = 0.0625;
  params.css = 12.5;
  params.converged = false;
  const ArimaParams back = ArimaParams::from_json(params.to_json());
  CHECK(back.p == params.p);
  CHECK(back.d == params.d);
  CHECK(back.q == params.q);
  CHECK(back.phi == params.phi);
  CHECK(back.theta == params.theta);
  CHECK(back.intercept == params.intercept);
  CHECK(back.css == params.css);
  CHECK(back.converged == params.converged);
}

TEST_CASE("simplex search finds a quadratic minimum") {
  const auto objective = [](std::span<const double> v) {
    const double dx = v[0] - 3.0;
    const double dy = v[1] + 1.0;
    return dx * dx + 2.0 * dy * dy + 0.5;
  };
  const std::vector<double> x0 = {0.0, 0.0};
  const NelderMeadResult result = nelder_mead(objective, x0, 0.5, 2000, 1e-12);
  CHECK(result.converged);
  CHECK(std::fabs(result.x[0] - 3.0) < 1e-4);
  CHECK(std::fabs(result.x[1] + 1.0) < 1e-4);
  CHECK(result.fx == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(result.iterations > 0);
}
