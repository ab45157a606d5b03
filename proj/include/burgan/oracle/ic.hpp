#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace burgan {

/// Initial condition u(x, 0) = a sin(b x + c pi) + d.
struct ICParams {
  double a = 0.0;
  double b = 0.0;  // spatial frequency, 1/length
  double c = 0.0;  // phase in units of pi
  double d = 0.0;  // offset

  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] std::string describe() const;

  friend bool operator==(const ICParams&, const ICParams&) = default;
};

/// Space-time sampling grid. x is periodic on [x_min, x_min + length) with the right endpoint
/// excluded; t runs over [0, t_end] with both endpoints included.
struct Grid {
  std::size_t nx = 512;
  std::size_t nt = 196;
  double x_min = -8.0;
  double length = 16.0;
  double t_end = 10.0;

  [[nodiscard]] double dx() const { return length / static_cast<double>(nx); }
  [[nodiscard]] double dt() const { return t_end / static_cast<double>(nt - 1); }
  [[nodiscard]] double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx(); }
  [[nodiscard]] double t(std::size_t n) const { return static_cast<double>(n) * dt(); }
  [[nodiscard]] double x_max() const { return x_min + length; }

  /// Throws ConfigError for nx < 4, odd nx, nt < 2 or non-positive extents.
  void validate() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Samples of the initial condition on the grid's x points.
std::vector<double> sample_ic(const ICParams& ic, const Grid& grid);

/// Parameter sets the dataset is built from.
inline constexpr std::array<double, 2> kAmplitudes{-1.0, 1.0};
inline constexpr std::array<double, 5> kFrequencies{0.1, 0.5, 0.9, 1.3, 1.7};
inline constexpr std::array<double, 4> kPhases{0.0, 0.5, 0.9, 1.0};
inline constexpr std::array<double, 3> kOffsets{0.0, 0.7, 1.4};
inline constexpr std::size_t kDatasetSize = 120;
inline constexpr std::size_t kTestSize = 20;

/// All 120 combinations in lexicographic (a, b, c, d) order.
std::vector<ICParams> dataset_ics();

/// The fixed test indices into dataset_ics(): 6k + (k mod 6) for k = 0..19. One per block of
/// six, with the in-block offset cycling so every value of every parameter appears.
std::vector<std::size_t> test_indices();

}  // namespace burgan
