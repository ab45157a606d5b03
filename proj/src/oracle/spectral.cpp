#include "burgan/oracle/spectral.hpp"

#include "burgan/common/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace burgan {

namespace {

// the FFTW planner is not re-entrant
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::size_t kStandardPoints = 512;

}  // namespace

struct SpectralOperator::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

SpectralOperator::SpectralOperator(std::size_t n, double length)
    : n_(n),
      modes_(n / 2 + 1),
      k_(modes_),
      plans_(std::make_unique<Plans>()),
      real_(n),
      spectrum_(modes_),
      work_(modes_),
      accum_(modes_),
      ud_(n),
      uxd_(n) {
  if (n < 4 || n % 2 != 0) throw ConfigError("spectral grid size must be even and >= 4");
  if (!(length > 0.0)) throw ConfigError("spectral domain length must be positive");
  for (std::size_t m = 0; m < modes_; ++m) k_[m] = 2.0 * std::numbers::pi * static_cast<double>(m) / length;

  std::lock_guard lock(planner_mutex());
  plans_->forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_.data(),
                                         reinterpret_cast<fftw_complex*>(spectrum_.data()), FFTW_ESTIMATE);
  plans_->inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(work_.data()),
                                         real_.data(), FFTW_ESTIMATE);
}

SpectralOperator::~SpectralOperator() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->inverse);
}

void SpectralOperator::forward(std::span<const double> in) {
  std::copy(in.begin(), in.end(), real_.begin());
  fftw_execute(plans_->forward);
}

void SpectralOperator::inverse(std::span<double> out) {
  // c2r overwrites its input, which is scratch here
  fftw_execute(plans_->inverse);
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t j = 0; j < n_; ++j) out[j] = real_[j] * inv_n;
}

void SpectralOperator::derivative(std::span<const double> values, int order, std::span<double> out) {
  if (values.size() != n_ || out.size() != n_) throw ConfigError("spectral derivative: sample count mismatch");
  if (order != 1 && order != 2) throw ConfigError("spectral derivative order must be 1 or 2");
  forward(values);
  for (std::size_t m = 0; m < modes_; ++m) {
    const std::complex<double> ik(0.0, k_[m]);
    work_[m] = order == 1 ? ik * spectrum_[m] : -k_[m] * k_[m] * spectrum_[m];
  }
  if (order == 1) work_[n_ / 2] = 0.0;
  inverse(out);
}

void SpectralOperator::burgers_rhs(std::span<const double> u, double nu, std::span<double> out) {
  if (u.size() != n_ || out.size() != n_) throw ConfigError("burgers_rhs: sample count mismatch");
  const std::size_t cut = dealias_cutoff();

  forward(u);
  for (std::size_t m = 0; m < modes_; ++m) accum_[m] = -nu * k_[m] * k_[m] * spectrum_[m];

  for (std::size_t m = 0; m < modes_; ++m) work_[m] = m <= cut ? spectrum_[m] : std::complex<double>{};
  inverse(ud_);
  for (std::size_t m = 0; m < modes_; ++m) work_[m] = m <= cut ? std::complex<double>(0.0, k_[m]) * spectrum_[m] : std::complex<double>{};
  inverse(uxd_);

  for (std::size_t j = 0; j < n_; ++j) ud_[j] *= uxd_[j];
  forward(ud_);
  for (std::size_t m = 0; m < modes_; ++m) work_[m] = accum_[m] - (m <= cut ? spectrum_[m] : std::complex<double>{});
  work_[0] = 0.0;
  inverse(out);
}

std::vector<double> spectral_derivative(std::span<const double> values, int order, double length) {
  if (values.size() != kStandardPoints) {
    throw ConfigError("spectral_derivative expects 512 samples, got " + std::to_string(values.size()));
  }
  SpectralOperator op(values.size(), length);
  std::vector<double> out(values.size());
  op.derivative(values, order, out);
  return out;
}

std::vector<double> burgers_rhs(std::span<const double> u, double nu) {
  if (u.size() != kStandardPoints) throw ConfigError("burgers_rhs expects 512 samples");
  SpectralOperator op(u.size(), 16.0);
  std::vector<double> out(u.size());
  op.burgers_rhs(u, nu, out);
  return out;
}

std::size_t substeps_per_snapshot(const Grid& grid, double dt_max) {
  if (!(dt_max > 0.0)) throw ConfigError("internal time step must be positive");
  const double ratio = grid.dt() / dt_max;
  return static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
}

SolutionField integrate(const ICParams& ic, const Grid& grid, double nu, double dt_max, IntegrationStats* stats) {
  grid.validate();
  const std::size_t substeps = substeps_per_snapshot(grid, dt_max);
  const double dt = grid.dt() / static_cast<double>(substeps);

  // RK4 reaches -2.78 on the negative real axis; the stiffest viscous mode sits at -nu k_max^2
  const double k_max = std::numbers::pi * static_cast<double>(grid.nx) / grid.length;
  if (dt * nu * k_max * k_max > 2.5) {
    throw ConfigError("internal step " + std::to_string(dt) + " is outside the RK4 stability region");
  }
  if (stats != nullptr) *stats = {substeps, dt};

  const std::size_t n = grid.nx;
  SpectralOperator op(n, grid.length);
  SolutionField field{ic, grid, nu, ad::Matrix(static_cast<Eigen::Index>(grid.nt), static_cast<Eigen::Index>(n))};

  std::vector<double> u = sample_ic(ic, grid);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  auto store = [&](std::size_t row) {
    for (std::size_t j = 0; j < n; ++j) field.u(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = u[j];
  };
  store(0);

  for (std::size_t row = 1; row < grid.nt; ++row) {
    for (std::size_t s = 0; s < substeps; ++s) {
      op.burgers_rhs(u, nu, k1);
      for (std::size_t j = 0; j < n; ++j) stage[j] = u[j] + 0.5 * dt * k1[j];
      op.burgers_rhs(stage, nu, k2);
      for (std::size_t j = 0; j < n; ++j) stage[j] = u[j] + 0.5 * dt * k2[j];
      op.burgers_rhs(stage, nu, k3);
      for (std::size_t j = 0; j < n; ++j) stage[j] = u[j] + dt * k3[j];
      op.burgers_rhs(stage, nu, k4);
      for (std::size_t j = 0; j < n; ++j) u[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    for (double v : u) {
      if (!(std::abs(v) <= 100.0)) {
        throw IntegrationDiverged("integration diverged for " + ic.describe() + " before t=" +
                                  std::to_string(grid.t(row)));
      }
    }
    store(row);
  }
  return field;
}

ad::Matrix residual_field(const SolutionField& field, double nu) {
  const Grid& g = field.grid;
  if (g.nt < 5) throw ConfigError("residual_field needs at least 5 snapshots");
  const std::size_t n = g.nx;
  SpectralOperator op(n, g.length);
  std::vector<double> row(n), ux(n), uxx(n);
  const double dt = g.dt();
  const std::size_t last = g.nt - 1;
  ad::Matrix out(static_cast<Eigen::Index>(g.nt), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < g.nt; ++r) {
    for (std::size_t j = 0; j < n; ++j) row[j] = field.at(r, j);
    op.derivative(row, 1, ux);
    op.derivative(row, 2, uxx);
    for (std::size_t j = 0; j < n; ++j) {
      double ut;
      if (r >= 2 && r + 2 < g.nt) {
        ut = (-field.at(r + 2, j) + 8.0 * field.at(r + 1, j) - 8.0 * field.at(r - 1, j) + field.at(r - 2, j)) /
             (12.0 * dt);
      } else if (r == 0) {
        ut = (-3.0 * field.at(0, j) + 4.0 * field.at(1, j) - field.at(2, j)) / (2.0 * dt);
      } else if (r == last) {
        ut = (3.0 * field.at(last, j) - 4.0 * field.at(last - 1, j) + field.at(last - 2, j)) / (2.0 * dt);
      } else {
        ut = (field.at(r + 1, j) - field.at(r - 1, j)) / (2.0 * dt);
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = ut - nu * uxx[j] + row[j] * ux[j];
    }
  }
  return out;
}

double residual_norm(const SolutionField& field, double nu) {
  const ad::Matrix res = residual_field(field, nu);
  const auto interior = res.middleRows(2, res.rows() - 4);
  return std::sqrt(interior.squaredNorm() / static_cast<double>(interior.size()));
}

std::vector<double> row_means(const SolutionField& field) {
  std::vector<double> out(static_cast<std::size_t>(field.u.rows()));
  for (Eigen::Index r = 0; r < field.u.rows(); ++r) out[static_cast<std::size_t>(r)] = field.u.row(r).mean();
  return out;
}

std::vector<double> row_energies(const SolutionField& field) {
  std::vector<double> out(static_cast<std::size_t>(field.u.rows()));
  const double dx = field.grid.dx();
  for (Eigen::Index r = 0; r < field.u.rows(); ++r) out[static_cast<std::size_t>(r)] = dx * field.u.row(r).squaredNorm();
  return out;
}

}  // namespace burgan
