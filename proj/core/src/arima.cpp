#include "plugcast/arima.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "plugcast/nelder_mead.hpp"

namespace plugcast {

namespace {

// Strict-inequality margin keeping the optimizer off the region boundary.
constexpr double kRegionEdge = 0.999;

bool in_triangle(std::span<const double> coef) {
  switch (coef.size()) {
    case 0:
      return true;
    case 1:
      return std::fabs(coef[0]) < kRegionEdge;
    case 2:
      // AR(2)/MA(2) admissible region: a triangle in (c1, c2).
      return std::fabs(coef[1]) < kRegionEdge && coef[1] + coef[0] < kRegionEdge &&
             coef[1] - coef[0] < kRegionEdge;
    default:
      return false;
  }
}

}  // namespace

bool ar_stationary(std::span<const double> phi) { return in_triangle(phi); }
bool ma_invertible(std::span<const double> theta) { return in_triangle(theta); }

std::vector<double> difference(std::span<const double> series, int d) {
  if (d < 0) throw std::invalid_argument("difference: negative order");
  std::vector<double> w(series.begin(), series.end());
  for (int k = 0; k < d; ++k) {
    if (w.size() < 2) throw std::invalid_argument("difference: series too short");
    for (std::size_t i = 0; i + 1 < w.size(); ++i) w[i] = w[i + 1] - w[i];
    w.pop_back();
  }
  return w;
}

double arima_css(std::span<const double> w, std::span<const double> phi,
                 std::span<const double> theta, double intercept) {
  const std::size_t p = phi.size();
  const std::size_t q = theta.size();
  if (w.size() <= p) throw std::invalid_argument("arima_css: series shorter than AR order");
  std::vector<double> e(w.size(), 0.0);
  double css = 0.0;
  for (std::size_t t = p; t < w.size(); ++t) {
    double pred = intercept;
    for (std::size_t i = 0; i < p; ++i) pred += phi[i] * w[t - 1 - i];
    for (std::size_t j = 0; j < q; ++j) {
      if (t >= p + 1 + j) pred += theta[j] * e[t - 1 - j];
    }
    e[t] = w[t] - pred;
    css += e[t] * e[t];
  }
  return css;
}

ArimaParams fit_arima(std::span<const double> series, int p, int d, int q) {
  if (p < 0 || p > 2 || q < 0 || q > 2) {
    throw std::invalid_argument("fit_arima: AR and MA orders up to 2 are supported");
  }
  if (p == 0 && q == 0) throw std::invalid_argument("fit_arima: p and q both zero");
  const std::vector<double> w = difference(series, d);
  if (w.size() < 50) {
    throw std::invalid_argument("fit_arima: need at least 50 observations after differencing");
  }

  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(w.size());

  const std::size_t np = static_cast<std::size_t>(p);
  const std::size_t nq = static_cast<std::size_t>(q);
  std::vector<double> x0(np + nq + 1, 0.0);
  x0.back() = mean;

  const auto objective = [&](std::span<const double> v) {
    const std::span<const double> phi = v.subspan(0, np);
    const std::span<const double> theta = v.subspan(np, nq);
    if (!ar_stationary(phi) || !ma_invertible(theta)) {
      // Steep penalty growing with the violation keeps the search inside
      // the admissible region without a hard wall.
      double excess = 0.0;
      for (double c : phi) excess += std::max(0.0, std::fabs(c) - kRegionEdge);
      for (double c : theta) excess += std::max(0.0, std::fabs(c) - kRegionEdge);
      return 1e12 * (1.0 + excess);
    }
    return arima_css(w, phi, theta, v.back());
  };

  const NelderMeadResult opt = nelder_mead(objective, x0, 0.1, 500, 1e-10);

  ArimaParams params;
  params.p = p;
  params.d = d;
  params.q = q;
  params.phi.assign(opt.x.begin(), opt.x.begin() + static_cast<std::ptrdiff_t>(np));
  params.theta.assign(opt.x.begin() + static_cast<std::ptrdiff_t>(np),
                      opt.x.begin() + static_cast<std::ptrdiff_t>(np + nq));
  params.intercept = opt.x.back();
  params.css = opt.fx;
  params.converged = opt.converged;
  return params;
}

ArimaState arima_state(const ArimaParams& params, std::span<const double> history) {
  const std::size_t p = params.phi.size();
  const std::size_t q = params.theta.size();

  std::vector<double> w = difference(history, params.d);
  if (w.size() <= p) throw std::invalid_argument("arima_state: history shorter than AR order");

  // Rebuild in-sample residuals so the MA part starts from the right tail.
  std::vector<double> e(w.size(), 0.0);
  for (std::size_t t = p; t < w.size(); ++t) {
    double pred = params.intercept;
    for (std::size_t i = 0; i < p; ++i) pred += params.phi[i] * w[t - 1 - i];
    for (std::size_t j = 0; j < q; ++j) {
      if (t >= p + 1 + j) pred += params.theta[j] * e[t - 1 - j];
    }
    e[t] = w[t] - pred;
  }

  ArimaState state;
  state.w_tail.assign(w.end() - static_cast<std::ptrdiff_t>(p), w.end());
  state.e_tail.assign(e.end() - static_cast<std::ptrdiff_t>(q), e.end());
  state.level_tail.resize(static_cast<std::size_t>(params.d));
  std::vector<double> cur(history.begin(), history.end());
  for (int k = 0; k < params.d; ++k) {
    state.level_tail[static_cast<std::size_t>(k)] = cur.back();
    cur = difference(cur, 1);
  }
  return state;
}

std::vector<double> arima_forecast_from(const ArimaParams& params, ArimaState state,
                                        int horizon) {
  if (horizon < 0) throw std::invalid_argument("arima_forecast: negative horizon");
  if (horizon == 0) return {};
  const std::size_t p = params.phi.size();
  const std::size_t q = params.theta.size();
  if (state.w_tail.size() != p || state.e_tail.size() != q ||
      state.level_tail.size() != static_cast<std::size_t>(params.d)) {
    throw std::invalid_argument("arima_forecast: state does not match the model orders");
  }

  std::vector<double>& w = state.w_tail;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    double pred = params.intercept;
    for (std::size_t i = 0; i < p; ++i) pred += params.phi[i] * w[w.size() - 1 - i];
    for (std::size_t j = 0; j < q; ++j) {
      // Future shocks are zero; only residuals from the observed tail
      // contribute, and they age out of the window step by step.
      if (j >= static_cast<std::size_t>(h)) {
        pred += params.theta[j] *
                state.e_tail[state.e_tail.size() - 1 - (j - static_cast<std::size_t>(h))];
      }
    }
    w.push_back(pred);

    double value = pred;
    for (std::size_t k = state.level_tail.size(); k-- > 0;) {
      value = state.level_tail[k] + value;
      state.level_tail[k] = value;
    }
    out.push_back(value);
  }
  return out;
}

std::vector<double> arima_forecast(const ArimaParams& params,
                                   std::span<const double> history, int horizon) {
  if (horizon == 0) return {};
  return arima_forecast_from(params, arima_state(params, history), horizon);
}

std::string ArimaParams::to_json() const {
  nlohmann::json j;
  j["schema"] = "plugcast.arima.v1";
  j["p"] = p;
  j["d"] = d;
  j["q"] = q;
  j["phi"] = phi;
  j["theta"] = theta;
  j["intercept"] = intercept;
  j["css"] = css;
  j["converged"] = converged;
  return j.dump();
}

ArimaParams ArimaParams::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("schema").get<std::string>() != "plugcast.arima.v1") {
    throw std::runtime_error("arima: unknown schema");
  }
  ArimaParams params;
  params.p = j.at("p").get<int>();
  params.d = j.at("d").get<int>();
  params.q = j.at("q").get<int>();
  params.phi = j.at("phi").get<std::vector<double>>();
  params.theta = j.at("theta").get<std::vector<double>>();
  params.intercept = j.at("intercept").get<double>();
  params.css = j.value("css", 0.0);
  params.converged = j.value("converged", true);
  return params;
}

}  // namespace plugcast
