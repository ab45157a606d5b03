#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace burgan::ad {

inline constexpr double kGradcheckFloor = 1e-8;

/// Scalar objective of a flat parameter vector.
using ScalarFunction = std::function<double(std::span<const double>)>;

/// Max over coordinates of |analytic - central FD| / max(|analytic|, 1e-8).
/// Never throws; a NaN from f propagates into the result.
double finite_difference_check(const ScalarFunction& f, std::span<const double> point,
                               std::span<const double> analytic, double step);

/// Same, restricted to the listed coordinates (for objectives with many parameters).
double finite_difference_check(const ScalarFunction& f, std::span<const double> point,
                               std::span<const double> analytic, double step,
                               std::span<const std::size_t> coordinates);

/// Central difference (f(p + h e_i) - f(p - h e_i)) / 2h.
double central_difference(const ScalarFunction& f, std::span<const double> point, std::size_t coordinate, double step);

}  // namespace burgan::ad
