#include "burgan/eval/evaluation.hpp"

#include "burgan/common/binary_io.hpp"
#include "burgan/common/errors.hpp"
#include "burgan/common/parallel.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>

namespace burgan::eval {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::vector<double> axis(std::size_t n, auto&& at) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = at(k);
  return out;
}

std::optional<double> try_correlation(const Matrix& a, const Matrix& b) {
  try {
    return variance_error_correlation(a, b);
  } catch (const UndefinedMetric&) {
    return std::nullopt;
  }
}

}  // namespace

double relative_l2(const Matrix& u_hat, const Matrix& u_ref) {
  if (u_hat.rows() != u_ref.rows() || u_hat.cols() != u_ref.cols()) {
    throw ConfigError("relative_l2: field shapes differ");
  }
  const double den = u_ref.norm();
  if (den == 0.0) throw UndefinedMetric("relative_l2: reference field is identically zero");
  return (u_hat - u_ref).norm() / den;
}

double variance_error_correlation(const Matrix& var_field, const Matrix& error_field) {
  if (var_field.rows() != error_field.rows() || var_field.cols() != error_field.cols()) {
    throw ConfigError("variance_error_correlation: field shapes differ");
  }
  const auto a = var_field.array() - var_field.mean();
  const auto b = error_field.array() - error_field.mean();
  const double saa = a.square().sum();
  const double sbb = b.square().sum();
  if (saa == 0.0 || sbb == 0.0) throw UndefinedMetric("correlation of a constant field is undefined");
  const double r = (a * b).sum() / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

ModelPredictor::ModelPredictor(ModelParams params) : params_(std::move(params)) { params_.validate(); }

Matrix ModelPredictor::predict(std::span<const double> ic, const Grid& grid, std::span<const double> z) const {
  return predict_field(params_, ic, grid, z);
}

Matrix PersistencePredictor::predict(std::span<const double> ic, const Grid& grid, std::span<const double>) const {
  if (ic.size() != grid.nx) throw ConfigError("persistence: IC length differs from the grid");
  const Eigen::Map<const Matrix> row(ic.data(), 1, static_cast<Eigen::Index>(ic.size()));
  return row.replicate(static_cast<Eigen::Index>(grid.nt), 1);
}

Matrix predict_field(const ModelParams& params, std::span<const double> ic, const Grid& grid,
                     std::span<const double> z) {
  const LatentCode latent = encode(params, ic);
  const auto xs = axis(grid.nx, [&](std::size_t j) { return grid.x(j); });
  const auto ts = axis(grid.nt, [&](std::size_t n) { return grid.t(n); });
  return predict_grid(params, latent, z, xs, ts);
}

NoiseVector noise_for_seed(std::uint64_t z_seed, std::size_t z_dim) {
  std::mt19937_64 rng(z_seed);
  return draw_noise(rng, z_dim);
}

EnsembleResult ensemble_statistics(std::span<const Matrix> fields) {
  if (fields.size() < 2) throw ConfigError("an ensemble needs at least 2 members");
  EnsembleResult r;
  r.K = fields.size();
  // deviations from the first member, so identical members give their exact value and zero variance
  const Matrix& base = fields[0];
  Matrix shift = Matrix::Zero(base.rows(), base.cols());
  for (const Matrix& f : fields) {
    if (f.rows() != base.rows() || f.cols() != base.cols()) throw ConfigError("ensemble members differ in shape");
    shift += f - base;
  }
  r.mean = base + shift / static_cast<double>(r.K);
  r.var = Matrix::Zero(r.mean.rows(), r.mean.cols());
  for (const Matrix& f : fields) r.var.array() += (f - r.mean).array().square();
  r.var /= static_cast<double>(r.K - 1);
  return r;
}

EnsembleResult ensemble(const FieldPredictor& predictor, std::span<const double> ic, const Grid& grid, std::size_t K,
                        std::uint64_t seed) {
  if (K < 2) throw ConfigError("ensemble size K must be >= 2");
  std::vector<Matrix> fields;
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < K; ++k) {
    seeds.push_back(seed + k);
    fields.push_back(predictor.predict(ic, grid, noise_for_seed(seeds.back(), predictor.z_dim())));
  }
  EnsembleResult r = ensemble_statistics(fields);
  r.z_seeds = std::move(seeds);
  return r;
}

EvalReport evaluate_testset(const FieldPredictor& predictor, const Dataset& dataset, const EvalOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto& ids = dataset.splits.test;
  if (ids.size() != kTestSize) throw ConfigError("the test split must have 20 ICs, got " + std::to_string(ids.size()));
  if (options.K < 2) throw ConfigError("ensemble size K must be >= 2");
  for (std::size_t id : ids) {
    if (id >= dataset.fields.size()) throw IoError("test field " + std::to_string(id) + " is missing");
  }
  if (options.plot_dir) fs::create_directories(*options.plot_dir);

  EvalReport report;
  report.predictor = predictor.name();
  report.K = options.K;
  report.seed = options.seed;
  report.per_ic.resize(ids.size());
  parallel_for(ids.size(), options.threads, [&](std::size_t k) {
    const SolutionField& ref = dataset.fields[ids[k]];
    const std::vector<double> ic(ref.u.row(0).data(), ref.u.row(0).data() + ref.u.cols());
    const EnsembleResult ens = ensemble(predictor, ic, ref.grid, options.K, options.seed);
    const Matrix single = predictor.predict(ic, ref.grid, noise_for_seed(ens.z_seeds.front(), predictor.z_dim()));

    ICReport& r = report.per_ic[k];
    r.ic_index = ids[k];
    r.ic = ref.ic;
    r.rel_l2_mean = relative_l2(ens.mean, ref.u);
    r.rel_l2_single = relative_l2(single, ref.u);
    const Matrix sq_err = (ens.mean - ref.u).array().square().matrix();
    r.var_err_corr = try_correlation(ens.var, sq_err);

    Matrix residual;
    if (ref.grid.nt >= 5) {
      residual = residual_field(SolutionField{ref.ic, ref.grid, ref.nu, ens.mean}, ref.nu);
      r.var_residual_corr = try_correlation(ens.var, residual.array().square().matrix());
    }
    if (options.plot_dir) {
      char name[32];
      std::snprintf(name, sizeof name, "ic_%03zu.csv", ids[k]);
      write_file(*options.plot_dir / name, plot_csv(ref, ens, residual));
    }
  });

  double corr_sum = 0.0;
  std::size_t corr_count = 0;
  for (const ICReport& r : report.per_ic) {
    report.mean_rel_l2 += r.rel_l2_mean;
    report.mean_rel_l2_single += r.rel_l2_single;
    if (r.var_err_corr) {
      corr_sum += *r.var_err_corr;
      ++corr_count;
    }
  }
  report.mean_rel_l2 /= static_cast<double>(report.per_ic.size());
  report.mean_rel_l2_single /= static_cast<double>(report.per_ic.size());
  if (corr_count > 0) report.mean_var_err_corr = corr_sum / static_cast<double>(corr_count);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::string out = "ic_index,rel_l2_mean,rel_l2_single,var_err_corr\n";
  for (const ICReport& r : report.per_ic) {
    out += std::to_string(r.ic_index) + "," + fmt(r.rel_l2_mean) + "," + fmt(r.rel_l2_single) + "," +
           fmt(r.var_err_corr) + "\n";
  }
  return out;
}

std::string report_json(const EvalReport& report) {
  const auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json j;
  j["predictor"] = report.predictor;
  j["K"] = report.K;
  j["seed"] = report.seed;
  j["test_ics"] = report.per_ic.size();
  j["mean_rel_l2"] = report.mean_rel_l2;
  j["mean_rel_l2_single"] = report.mean_rel_l2_single;
  j["mean_var_err_corr"] = opt(report.mean_var_err_corr);
  ordered_json per = ordered_json::array();
  for (const ICReport& r : report.per_ic) {
    per.push_back({{"ic_index", r.ic_index},
                   {"a", r.ic.a},
                   {"b", r.ic.b},
                   {"c", r.ic.c},
                   {"d", r.ic.d},
                   {"rel_l2_mean", r.rel_l2_mean},
                   {"rel_l2_single", r.rel_l2_single},
                   {"var_err_corr", opt(r.var_err_corr)},
                   {"var_residual_corr", opt(r.var_residual_corr)}});
  }
  j["per_ic"] = per;
  return j.dump(2) + "\n";
}

void write_report(const EvalReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "report.json", report_json(report));
  write_file(dir / "report.csv", report_csv(report));
}

std::string plot_csv(const SolutionField& reference, const EnsembleResult& ens, const Matrix& residual) {
  const Grid& g = reference.grid;
  const bool has_residual = residual.rows() == reference.u.rows() && residual.cols() == reference.u.cols();
  std::string out = "x,t,u_ref,u_mean,u_var,abs_err,residual\n";
  out.reserve(g.nt * g.nx * 120);
  for (std::size_t n = 0; n < g.nt; ++n) {
    for (std::size_t j = 0; j < g.nx; ++j) {
      const auto r = static_cast<Eigen::Index>(n), c = static_cast<Eigen::Index>(j);
      out += fmt(g.x(j)) + "," + fmt(g.t(n)) + "," + fmt(reference.u(r, c)) + "," + fmt(ens.mean(r, c)) + "," +
             fmt(ens.var(r, c)) + "," + fmt(std::abs(ens.mean(r, c) - reference.u(r, c))) + "," +
             (has_residual ? fmt(residual(r, c)) : std::string()) + "\n";
    }
  }
  return out;
}

}  // namespace burgan::eval
