#pragma once

#include <functional>
#include <span>
#include <vector>

namespace plugcast {

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Downhill simplex with the textbook coefficients (reflection 1,
// expansion 2, contraction 0.5, shrink 0.5). The initial simplex is x0
// plus one vertex per dimension offset by `step` along that axis.
// Converges when the simplex function-value spread falls below ftol.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> x0, double step = 0.1,
                             int max_iterations = 500, double ftol = 1e-10);

}  // namespace plugcast
