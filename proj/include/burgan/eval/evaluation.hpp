#pragma once

#include "burgan/model/model.hpp"
#include "burgan/oracle/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace burgan::eval {

using ad::Matrix;

/// ||u_hat - u_ref|| / ||u_ref|| over every entry. ConfigError on a shape mismatch,
/// UndefinedMetric when u_ref is identically zero.
double relative_l2(const Matrix& u_hat, const Matrix& u_ref);

/// Pearson correlation of two equally shaped fields over all entries. UndefinedMetric when
/// either field is constant.
double variance_error_correlation(const Matrix& var_field, const Matrix& error_field);

/// Something that maps an initial condition and a noise draw to a field on a grid.
class FieldPredictor {
 public:
  virtual ~FieldPredictor() = default;
  /// `ic` is the 512-sample t = 0 row; returns grid.nt x grid.nx.
  [[nodiscard]] virtual Matrix predict(std::span<const double> ic, const Grid& grid,
                                       std::span<const double> z) const = 0;
  [[nodiscard]] virtual std::size_t z_dim() const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

class ModelPredictor final : public FieldPredictor {
 public:
  explicit ModelPredictor(ModelParams params);
  [[nodiscard]] Matrix predict(std::span<const double> ic, const Grid& grid, std::span<const double> z) const override;
  [[nodiscard]] std::size_t z_dim() const override { return params_.z_dim; }
  [[nodiscard]] std::string name() const override { return "model"; }

 private:
  ModelParams params_;
};

/// u_hat(x, t) = u(x, 0).
class PersistencePredictor final : public FieldPredictor {
 public:
  [[nodiscard]] Matrix predict(std::span<const double> ic, const Grid& grid, std::span<const double> z) const override;
  [[nodiscard]] std::size_t z_dim() const override { return 1; }
  [[nodiscard]] std::string name() const override { return "persistence"; }
};

/// Generator field on every grid point with one fixed z.
Matrix predict_field(const ModelParams& params, std::span<const double> ic, const Grid& grid,
                     std::span<const double> z);

/// Noise vector k of an ensemble seeded with `seed` is drawn from a stream seeded with seed + k,
/// so a single draw can be reproduced from its own seed.
NoiseVector noise_for_seed(std::uint64_t z_seed, std::size_t z_dim);

struct EnsembleResult {
  Matrix mean;
  Matrix var;  // unbiased, K - 1 in the denominator
  std::size_t K = 0;
  std::vector<std::uint64_t> z_seeds;
};

/// Pointwise mean and variance of K fields drawn with z seeds seed, seed + 1, ...
/// Throws ConfigError for K < 2.
EnsembleResult ensemble(const FieldPredictor& predictor, std::span<const double> ic, const Grid& grid, std::size_t K,
                        std::uint64_t seed);

/// Mean and unbiased variance of given fields (two passes). Throws ConfigError for fewer than 2.
EnsembleResult ensemble_statistics(std::span<const Matrix> fields);

struct ICReport {
  std::size_t ic_index = 0;
  ICParams ic;
  double rel_l2_mean = 0.0;    // ensemble mean vs oracle
  double rel_l2_single = 0.0;  // first draw vs oracle
  /// Correlation of the ensemble variance with the squared error of the mean, and with the
  /// squared PDE residual of the mean; empty when undefined (e.g. zero variance).
  std::optional<double> var_err_corr;
  std::optional<double> var_residual_corr;
};

struct EvalReport {
  std::string predictor;
  std::size_t K = 0;
  std::uint64_t seed = 0;
  std::vector<ICReport> per_ic;
  double mean_rel_l2 = 0.0;
  double mean_rel_l2_single = 0.0;
  /// Mean over the ICs where the correlation is defined; empty if it is defined for none.
  std::optional<double> mean_var_err_corr;
  double seconds = 0.0;
};

struct EvalOptions {
  std::size_t K = 64;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// When set, per-IC CSV grids (x,t,u_ref,u_mean,u_var,abs_err,residual) are written here.
  std::optional<std::filesystem::path> plot_dir;
};

/// Evaluates the 20 test fields of `dataset`. Throws ConfigError when the test split is not 20 ICs.
EvalReport evaluate_testset(const FieldPredictor& predictor, const Dataset& dataset, const EvalOptions& options);

/// report.json and report.csv (ic_index,rel_l2_mean,rel_l2_single,var_err_corr) in `dir`.
/// The runtime is left out of both so they are reproducible byte for byte.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

std::string report_csv(const EvalReport& report);
std::string report_json(const EvalReport& report);

/// CSV grid for plotting.
std::string plot_csv(const SolutionField& reference, const EnsembleResult& ens, const Matrix& residual);

}  // namespace burgan::eval
