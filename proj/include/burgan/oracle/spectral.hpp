#pragma once

#include "burgan/autodiff/tape.hpp"
#include "burgan/oracle/ic.hpp"

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace burgan {

inline constexpr double kViscosity = 0.1;
inline constexpr double kDefaultInternalDt = 1e-3;

/// Fourier pseudospectral operators on a periodic grid of n points over `length`.
/// Wavenumbers k = 2 pi m / length, m in [-n/2, n/2). Owns its FFT plans and scratch space,
/// so one instance must not be used from two threads at once.
class SpectralOperator {
 public:
  SpectralOperator(std::size_t n, double length);
  ~SpectralOperator();
  SpectralOperator(const SpectralOperator&) = delete;
  SpectralOperator& operator=(const SpectralOperator&) = delete;

  [[nodiscard]] std::size_t size() const noexcept { return n_; }

  /// d^order/dx^order of periodic samples; the Nyquist mode is dropped for odd orders.
  void derivative(std::span<const double> values, int order, std::span<double> out);

  /// nu u_xx - u u_x with the nonlinear product dealiased by the 2/3 rule: both factors are
  /// truncated to |m| <= n/3 before multiplying and the product is truncated again.
  /// The mean mode of the result is exactly zero.
  void burgers_rhs(std::span<const double> u, double nu, std::span<double> out);

  /// Highest retained mode index under the 2/3 rule.
  [[nodiscard]] std::size_t dealias_cutoff() const noexcept { return n_ / 3; }

 private:
  void forward(std::span<const double> in);  // in -> spectrum_
  void inverse(std::span<double> out);       // work_ -> out, normalized

  std::size_t n_;
  std::size_t modes_;  // n/2 + 1
  std::vector<double> k_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
  std::vector<double> real_;
  std::vector<std::complex<double>> spectrum_;
  std::vector<std::complex<double>> work_;
  std::vector<std::complex<double>> accum_;
  std::vector<double> ud_;
  std::vector<double> uxd_;
};

/// Spectral derivative of 512 periodic samples over `length`. Throws ConfigError for any other
/// sample count or an order other than 1 or 2.
std::vector<double> spectral_derivative(std::span<const double> values, int order, double length = 16.0);

/// Right-hand side of u_t = nu u_xx - u u_x on the standard 512-point grid.
std::vector<double> burgers_rhs(std::span<const double> u, double nu = kViscosity);

/// Reference solution on a grid, one row per snapshot time.
struct SolutionField {
  ICParams ic;
  Grid grid;
  double nu = kViscosity;
  ad::Matrix u;  // nt x nx

  [[nodiscard]] double at(std::size_t n, std::size_t j) const { return u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)); }
};

struct IntegrationStats {
  std::size_t substeps_per_snapshot = 0;
  double dt = 0.0;
};

/// Method-of-lines RK4 integration from sample_ic(ic, grid) to t_end. The internal step is the
/// largest step <= dt_max that divides the snapshot spacing evenly. Throws ConfigError when
/// the step is outside the RK4 stability region for the viscous term, and IntegrationDiverged
/// naming the IC when |u| exceeds 100.
SolutionField integrate(const ICParams& ic, const Grid& grid, double nu = kViscosity,
                        double dt_max = kDefaultInternalDt, IntegrationStats* stats = nullptr);

/// Snapshot substeps chosen by integrate() for a grid and step bound.
std::size_t substeps_per_snapshot(const Grid& grid, double dt_max);

/// Pointwise u_t - nu u_xx + u u_x with spectral x-derivatives. u_t uses 4th-order centered
/// differences on rows 2..nt-3, 2nd-order centered on rows 1 and nt-2 and 2nd-order one-sided on
/// the first and last rows. Needs nt >= 5.
ad::Matrix residual_field(const SolutionField& field, double nu = kViscosity);

/// RMS of u_t - nu u_xx + u u_x over rows 2..nt-3, with u_t by 4th-order centered differences in
/// time and spatial derivatives spectral. Needs nt >= 5.
double residual_norm(const SolutionField& field, double nu = kViscosity);

/// Spatial mean of each row.
std::vector<double> row_means(const SolutionField& field);

/// dx * sum(u^2) of each row.
std::vector<double> row_energies(const SolutionField& field);

}  // namespace burgan
