#pragma once

#include <span>
#include <string>
#include <vector>

namespace plugcast {

// ARIMA(p, d, q) fitted by conditional sum of squares: after differencing
// d times, residuals follow
//   e_t = w_t - c - phi_1 w_{t-1} - ... - phi_p w_{t-p}
//             - theta_1 e_{t-1} - ... - theta_q e_{t-q}
// with presample residuals zero and t starting at p. Orders up to 2 are
// supported; the stationarity and invertibility regions for those orders
// have closed forms used both as optimizer constraints and validators.
struct ArimaParams {
  int p = 2;
  int d = 1;
  int q = 1;
  std::vector<double> phi;
  std::vector<double> theta;
  double intercept = 0.0;
  double css = 0.0;
  bool converged = true;

  std::string to_json() const;
  static ArimaParams from_json(const std::string& text);
};

std::vector<double> difference(std::span<const double> series, int d);

bool ar_stationary(std::span<const double> phi);
bool ma_invertible(std::span<const double> theta);

// Conditional sum of squared residuals of the differenced series under
// the given coefficients.
double arima_css(std::span<const double> w, std::span<const double> phi,
                 std::span<const double> theta, double intercept);

// Minimizes the CSS over (phi, theta, intercept) with a simplex search
// started at zero coefficients and the sample mean intercept. Requires
// at least 50 observations after differencing. A fit that stops on the
// iteration cap is returned with converged = false rather than rejected.
ArimaParams fit_arima(std::span<const double> series, int p = 2, int d = 1, int q = 1);

// Everything the recursion needs to continue past the end of a series:
// the last AR-order differenced values, the last MA-order residuals, and
// the closing value of each differencing level.
struct ArimaState {
  std::vector<double> w_tail;      // oldest first, size p
  std::vector<double> e_tail;      // oldest first, size q
  std::vector<double> level_tail;  // level 0 (raw) first, size d
};

ArimaState arima_state(const ArimaParams& params, std::span<const double> history);

// Recursive multi-step forecast from a saved tail state: future shocks
// are zero, forecast values feed back into the AR lags, and differencing
// is inverted cumulatively. horizon 0 yields an empty vector.
std::vector<double> arima_forecast_from(const ArimaParams& params, ArimaState state,
                                        int horizon);

// Convenience composition of arima_state and arima_forecast_from.
std::vector<double> arima_forecast(const ArimaParams& params,
                                   std::span<const double> history, int horizon);

}  // namespace plugcast
