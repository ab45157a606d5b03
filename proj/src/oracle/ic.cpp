#include "burgan/oracle/ic.hpp"

#include "burgan/common/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace burgan {

double ICParams::operator()(double x) const { return a * std::sin(b * x + c * std::numbers::pi) + d; }

std::string ICParams::describe() const {
  std::ostringstream out;
  out << "IC(a=" << a << ", b=" << b << ", c=" << c << ", d=" << d << ")";
  return out.str();
}

void Grid::validate() const {
  if (nx < 4 || nx % 2 != 0) throw ConfigError("grid nx must be even and >= 4, got " + std::to_string(nx));
  if (nt < 2) throw ConfigError("grid nt must be >= 2, got " + std::to_string(nt));
  if (!(length > 0.0) || !(t_end > 0.0)) throw ConfigError("grid extents must be positive");
}

std::vector<double> sample_ic(const ICParams& ic, const Grid& grid) {
  std::vector<double> out(grid.nx);
  for (std::size_t j = 0; j < grid.nx; ++j) out[j] = ic(grid.x(j));
  return out;
}

std::vector<ICParams> dataset_ics() {
  std::vector<ICParams> out;
  out.reserve(kDatasetSize);
  for (double a : kAmplitudes)
    for (double b : kFrequencies)
      for (double c : kPhases)
        for (double d : kOffsets) out.push_back({a, b, c, d});
  return out;
}

std::vector<std::size_t> test_indices() {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < kTestSize; ++k) out.push_back(6 * k + k % 6);
  return out;
}

}  // namespace burgan
