#include "burgan/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace burgan::ad {

double central_difference(const ScalarFunction& f, std::span<const double> point, std::size_t coordinate,
                          double step) {
  std::vector<double> p(point.begin(), point.end());
  const double x0 = p[coordinate];
  p[coordinate] = x0 + step;
  const double up = f(p);
  p[coordinate] = x0 - step;
  const double down = f(p);
  return (up - down) / (2.0 * step);
}

double finite_difference_check(const ScalarFunction& f, std::span<const double> point,
                               std::span<const double> analytic, double step,
                               std::span<const std::size_t> coordinates) {
  double worst = 0.0;
  for (std::size_t i : coordinates) {
    const double fd = central_difference(f, point, i, step);
    const double err = std::abs(analytic[i] - fd) / std::max(std::abs(analytic[i]), kGradcheckFloor);
    if (std::isnan(err)) return err;
    worst = std::max(worst, err);
  }
  return worst;
}

double finite_difference_check(const ScalarFunction& f, std::span<const double> point,
                               std::span<const double> analytic, double step) {
  std::vector<std::size_t> all(point.size());
  std::iota(all.begin(), all.end(), 0);
  return finite_difference_check(f, point, analytic, step, all);
}

}  // namespace burgan::ad
