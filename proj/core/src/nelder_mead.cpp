#include "plugcast/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace plugcast {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> x0, double step, int max_iterations,
                             double ftol) {
  const std::size_t dim = x0.size();
  if (dim == 0) throw std::invalid_argument("nelder_mead: empty start point");

  std::vector<std::vector<double>> simplex(dim + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += step;
  std::vector<double> value(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) value[i] = objective(simplex[i]);

  std::vector<std::size_t> rank(dim + 1);
  std::vector<double> centroid(dim), candidate(dim);
  NelderMeadResult result;

  for (int iter = 0; iter < max_iterations; ++iter) {
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::sort(rank.begin(), rank.end(),
              [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t best = rank[0];
    const std::size_t worst = rank[dim];
    const std::size_t second_worst = rank[dim - 1];

    result.iterations = iter;
    if (std::fabs(value[worst] - value[best]) <= ftol) {
      result.converged = true;
      break;
    }

    // Centroid of all vertices but the worst.
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[i][d];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    auto blend = [&](double coeff) {
      for (std::size_t d = 0; d < dim; ++d) {
        candidate[d] = centroid[d] + coeff * (centroid[d] - simplex[worst][d]);
      }
    };

    blend(1.0);  // reflection
    const double reflected = objective(candidate);
    if (reflected < value[best]) {
      const std::vector<double> reflected_point = candidate;
      blend(2.0);  // expansion
      const double expanded = objective(candidate);
      if (expanded < reflected) {
        simplex[worst] = candidate;
        value[worst] = expanded;
      } else {
        simplex[worst] = reflected_point;
        value[worst] = reflected;
      }
      continue;
    }
    if (reflected < value[second_worst]) {
      simplex[worst] = candidate;
      value[worst] = reflected;
      continue;
    }
    blend(-0.5);  // contraction toward the worst vertex
    const double contracted = objective(candidate);
    if (contracted < value[worst]) {
      simplex[worst] = candidate;
      value[worst] = contracted;
      continue;
    }
    // Shrink everything toward the best vertex.
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
      }
      value[i] = objective(simplex[i]);
    }
  }

  const std::size_t best = static_cast<std::size_t>(
      std::min_element(value.begin(), value.end()) - value.begin());
  result.x = simplex[best];
  result.fx = value[best];
  return result;
}

}  // namespace plugcast
