#include <doctest.h>

#include "burgan/common/binary_io.hpp"
#include "burgan/common/errors.hpp"
#include "burgan/oracle/dataset.hpp"
#include "burgan/oracle/spectral.hpp"
#include "support/fd_reference.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

using namespace burgan;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> grid_values(const Grid& g, auto&& f) {
  std::vector<double> out(g.nx);
  for (std::size_t j = 0; j < g.nx; ++j) out[j] = f(g.x(j));
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double rel_l2(std::span<const double> a, std::span<const double> ref) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ref[i]) * (a[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / den);
}

// smooth periodic field with a few random low modes
std::vector<double> band_limited(const Grid& g, std::uint64_t seed, int max_mode) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<double> amp_c, amp_s;
  for (int m = 0; m <= max_mode; ++m) {
    amp_c.push_back(n(rng));
    amp_s.push_back(n(rng));
  }
  return grid_values(g, [&](double x) {
    double v = 0;
    for (int m = 0; m <= max_mode; ++m) {
      const double k = 2 * kPi * m / g.length;
      v += amp_c[static_cast<std::size_t>(m)] * std::cos(k * x) + amp_s[static_cast<std::size_t>(m)] * std::sin(k * x);
    }
    return v;
  });
}

std::vector<double> last_row(const SolutionField& f) {
  const auto r = f.u.rows() - 1;
  return {f.u.row(r).data(), f.u.row(r).data() + f.u.cols()};
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("burgan_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("sample_ic closed forms") {
  Grid g;
  CHECK(g.x(256) == 0.0);
  CHECK(g.dx() == 16.0 / 512.0);
  CHECK(g.t(g.nt - 1) == doctest::Approx(10.0).epsilon(1e-15));

  const auto u1 = sample_ic({1, 0.5, 1.0, 0}, g);
  CHECK(std::abs(u1[256]) <= 1e-15);  // sin(pi)
  const auto u2 = sample_ic({-1, 0.1, 0, 1.4}, g);
  CHECK(u2[256] == 1.4);
}

TEST_CASE("the dataset IC family has 120 distinct members") {
  const auto ics = dataset_ics();
  CHECK(ics.size() == 120);
  Grid g;
  std::set<std::vector<double>> vectors;
  for (const auto& ic : ics) vectors.insert(sample_ic(ic, g));
  CHECK(vectors.size() == 120);
}

TEST_CASE("fixed test set covers every parameter value") {
  const auto ids = test_indices();
  const auto ics = dataset_ics();
  CHECK(ids.size() == 20);
  std::set<double> a, b, c, d;
  for (std::size_t id : ids) {
    a.insert(ics[id].a);
    b.insert(ics[id].b);
    c.insert(ics[id].c);
    d.insert(ics[id].d);
  }
  CHECK(a.size() == 2);
  CHECK(b.size() == 5);
  CHECK(c.size() == 4);
  CHECK(d.size() == 3);
}

TEST_CASE("spectral_derivative") {
  Grid g;
  const std::vector<double> constant(512, 0.7);
  for (int order : {1, 2}) {
    const auto d = spectral_derivative(constant, order);
    for (double v : d) CHECK(std::abs(v) <= 1e-12);
  }

  const double k = kPi / 2;  // m = 4 on the 16-long domain
  const auto u = grid_values(g, [&](double x) { return std::sin(k * x); });
  const auto du = spectral_derivative(u, 1);
  CHECK(max_abs_diff(du, grid_values(g, [&](double x) { return k * std::cos(k * x); })) <= 1e-10);
  const auto d2u = spectral_derivative(u, 2);
  CHECK(max_abs_diff(d2u, grid_values(g, [&](double x) { return -k * k * std::sin(k * x); })) <= 1e-10);

  const auto field = band_limited(g, 5, 8);
  CHECK(rel_l2(spectral_derivative(field, 1), testing::fd4_derivative(field, g.dx())) <= 1e-4);
  CHECK(rel_l2(spectral_derivative(field, 2), testing::fd4_second_derivative(field, g.dx())) <= 1e-4);

  CHECK_THROWS_AS(spectral_derivative(std::vector<double>(256, 0.0), 1), ConfigError);
  CHECK_THROWS_AS(spectral_derivative(constant, 3), ConfigError);
}

TEST_CASE("burgers_rhs") {
  Grid g;
  const auto flat = burgers_rhs(std::vector<double>(512, 1.4));
  for (double v : flat) CHECK(std::abs(v) <= 1e-12);

  const double k = kPi / 2;
  const auto u = grid_values(g, [&](double x) { return std::sin(k * x); });
  const auto expected = grid_values(g, [&](double x) {
    return -0.1 * k * k * std::sin(k * x) - k * std::sin(k * x) * std::cos(k * x);
  });
  CHECK(max_abs_diff(burgers_rhs(u), expected) <= 1e-8);

  // finite-difference evaluation of the same operator
  const auto field = band_limited(g, 9, 6);
  const auto ux = testing::fd4_derivative(field, g.dx());
  const auto uxx = testing::fd4_second_derivative(field, g.dx());
  std::vector<double> fd(512);
  for (std::size_t j = 0; j < 512; ++j) fd[j] = 0.1 * uxx[j] - field[j] * ux[j];
  CHECK(rel_l2(burgers_rhs(field), fd) <= 1e-3);

  double mean = 0;
  for (double v : burgers_rhs(sample_ic({1, 1.7, 0.9, 0.7}, g))) mean += v;
  CHECK(std::abs(mean / 512) <= 1e-13);
}

TEST_CASE("integrate: initial row, conservation, dissipation") {
  Grid g;
  IntegrationStats stats;
  const ICParams ic{1, 0.5, 0, 0};
  const SolutionField f = integrate(ic, g, kViscosity, kDefaultInternalDt, &stats);
  CHECK(stats.substeps_per_snapshot == 52);
  CHECK(stats.dt <= kDefaultInternalDt);

  const auto u0 = sample_ic(ic, g);
  for (std::size_t j = 0; j < g.nx; ++j) CHECK(f.at(0, j) == u0[j]);

  const auto means = row_means(f);
  for (double m : means) CHECK(std::abs(m - means[0]) <= 1e-8);
  const auto energy = row_energies(f);
  for (std::size_t r = 1; r < energy.size(); ++r) CHECK(energy[r] < energy[r - 1]);
}

TEST_CASE("integrate: constant initial data is stationary") {
  const SolutionField f = integrate({0, 0.5, 0, 0.7}, Grid{});
  CHECK((f.u.array() - 0.7).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("integrate agrees with the independent finite-difference integrator") {
  Grid g;
  for (const ICParams& ic : {ICParams{1, 0.5, 0, 0}, ICParams{-1, 1.7, 0.9, 1.4}, ICParams{1, 0.1, 1.0, 0.7}}) {
    IntegrationStats stats;
    const SolutionField f = integrate(ic, g, kViscosity, kDefaultInternalDt, &stats);
    const auto fine0 = testing::trig_interpolate(sample_ic(ic, g), 2048);
    // a quarter of the oracle step keeps the 2048-point diffusion term inside the RK4 region
    const auto ref = testing::fd_integrate(fine0, g.length, kViscosity, g.t_end, stats.dt / 4);
    std::vector<double> coarse(512);
    for (std::size_t j = 0; j < 512; ++j) coarse[j] = ref.final_state[4 * j];
    const double err = rel_l2(last_row(f), coarse);
    MESSAGE(ic.describe() << " rel. l2 vs FD reference at t=10: " << err);
    CHECK(err <= 1e-3);
  }
}

TEST_CASE("integrate errors") {
  Grid g;
  CHECK_THROWS_AS(integrate({1, 0.5, 0, 0}, g, kViscosity, 0.05), ConfigError);
  try {
    (void)integrate({1, 1.3, 0, 0}, g, -0.1);
    FAIL("expected divergence");
  } catch (const IntegrationDiverged& e) {
    CHECK(std::string(e.what()).find("b=1.3") != std::string::npos);
  }
}

TEST_CASE("residual_norm") {
  Grid g;
  const SolutionField f = integrate({1, 0.5, 0.5, 0.7}, g);
  const double r = residual_norm(f);
  MESSAGE("oracle residual RMS " << r);
  CHECK(r <= 1e-3);

  SolutionField flat = f;
  flat.u.setConstant(1.4);
  CHECK(residual_norm(flat) <= 1e-12);

  SolutionField wave = f;
  for (std::size_t n = 0; n < g.nt; ++n)
    for (std::size_t j = 0; j < g.nx; ++j) wave.u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) = std::sin(g.x(j));
  CHECK(residual_norm(wave) > 0.05);

  // grid-periodic wave frozen in time: residual is exactly -(0.1 u_xx - u u_x)
  const double k = kPi / 2;
  double acc = 0;
  for (std::size_t n = 0; n < g.nt; ++n)
    for (std::size_t j = 0; j < g.nx; ++j) {
      const double s = std::sin(k * g.x(j)), c = std::cos(k * g.x(j));
      wave.u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) = s;
      if (n >= 2 && n + 2 < g.nt) acc += std::pow(0.1 * k * k * s + k * s * c, 2);
    }
  const double expected = std::sqrt(acc / static_cast<double>((g.nt - 4) * g.nx));
  CHECK(residual_norm(wave) == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("field files round-trip and reject corruption") {
  const fs::path dir = scratch_dir("fields");
  Grid g;
  g.nt = 6;
  const SolutionField f = integrate({-1, 0.9, 0.5, 0.7}, g);
  write_field(dir / "f.brg", f);
  const SolutionField back = read_field(dir / "f.brg");
  CHECK(back.ic == f.ic);
  CHECK(back.grid == f.grid);
  CHECK(back.u == f.u);
  CHECK(fs::file_size(dir / "f.brg") == 4 + 3 * 4 + 5 * 8 + 6 * 512 * 8);

  const std::string raw = read_file(dir / "f.brg");
  CHECK(raw.substr(0, 4) == "BRGF");
  write_file(dir / "short.brg", raw.substr(0, raw.size() - 8));
  CHECK_THROWS_AS(read_field(dir / "short.brg"), IoError);
  write_file(dir / "bad.brg", "XXXX" + raw.substr(4));
  CHECK_THROWS_AS(read_field(dir / "bad.brg"), IoError);
  CHECK_THROWS_AS(read_field(dir / "missing.brg"), IoError);
}

TEST_CASE("split_dataset") {
  const SplitIds a = split_dataset(0);
  const SplitIds b = split_dataset(0);
  const SplitIds c = split_dataset(1);
  CHECK(a.train.size() == 85);
  CHECK(a.val.size() == 15);
  CHECK(a.test.size() == 20);
  CHECK(a.train == b.train);
  CHECK(a.test == c.test);
  CHECK(a.train != c.train);
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.val.begin(), a.val.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == 120);
}
