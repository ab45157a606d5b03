#pragma once

#include "burgan/model/checkpoint.hpp"
#include "burgan/model/model.hpp"
#include "burgan/oracle/dataset.hpp"
#include "burgan/train/adam.hpp"
#include "burgan/train/config.hpp"
#include "burgan/train/minibatch.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>

namespace burgan::train {

/// Loss values of one iteration. d_loss is from the first discriminator step.
struct StepMetrics {
  std::uint64_t iteration = 0;
  double d_loss = 0.0;
  double g_gan = 0.0;
  double l_pde = 0.0;
  double l_ic = 0.0;
  double l_bc = 0.0;
  double l_rec = 0.0;
  double g_total = 0.0;
  double g_grad_norm = 0.0;
  double d_grad_norm = 0.0;
};

struct ValidationMetrics {
  double rel_l2 = 0.0;  // ensemble mean over val_z draws, on the subsampled grid
  double l_ic = 0.0;    // mean over draws of the t = 0 MSE on the subsampled x points
  double l_pde = 0.0;   // PDE residual MSE on the subsampled grid, first draw
};

/// Point counts consumed so far, for the per-iteration batch composition check.
struct BatchCounters {
  std::uint64_t collocation = 0;
  std::uint64_t initial = 0;
  std::uint64_t boundary = 0;
  std::uint64_t real = 0;
};

/// Dataset rows the validation metrics use: every 8th x point and every 4th time level.
inline constexpr std::size_t kValStrideX = 8;
inline constexpr std::size_t kValStrideT = 4;

/// Noise draws for validation, fixed by the seed and independent of the iteration.
std::vector<NoiseVector> validation_noise(std::uint64_t seed, std::size_t count, std::size_t z_dim);

ValidationMetrics validate(const ModelParams& params, const Dataset& dataset, std::span<const std::size_t> ids,
                           std::span<const NoiseVector> noise);

/// Random stream for iteration `iteration` of a run seeded with `seed`.
std::mt19937_64 iteration_rng(std::uint64_t seed, std::uint64_t iteration);

/// Owns parameters and optimizer state; one call to step() is one training iteration
/// (d_steps discriminator updates, then g_steps generator updates).
class Trainer {
 public:
  Trainer(const TrainConfig& config, const Dataset& dataset);
  /// Continues from a checkpoint written by this class. Throws ConfigError if the stored
  /// settings differ from `config` in anything but the iteration count.
  Trainer(const TrainConfig& config, const Dataset& dataset, const Checkpoint& checkpoint);

  StepMetrics step();
  [[nodiscard]] ValidationMetrics validate() const;

  [[nodiscard]] Checkpoint checkpoint() const;
  [[nodiscard]] const ModelParams& params() const { return params_; }
  [[nodiscard]] std::uint64_t iteration() const { return iteration_; }
  [[nodiscard]] const BatchCounters& counters() const { return counters_; }
  [[nodiscard]] const std::vector<std::size_t>& train_pool() const { return train_pool_; }
  [[nodiscard]] const std::vector<std::size_t>& val_pool() const { return val_pool_; }

 private:
  void init_pools();

  TrainConfig config_;
  const Dataset* dataset_;
  ModelParams params_;
  AdamState adam_g_;
  AdamState adam_d_;
  std::uint64_t iteration_ = 0;
  BatchCounters counters_;
  std::vector<std::size_t> train_pool_;
  std::vector<std::size_t> val_pool_;
  std::vector<NoiseVector> val_noise_;
};

struct TrainSummary {
  std::uint64_t iterations = 0;
  ValidationMetrics final_validation;
  double seconds = 0.0;
};

/// Runs training to config.iterations, writing into out_dir:
///   checkpoint.brg   latest checkpoint (every checkpoint_every iterations and at the end)
///   metrics.csv      iter,d_loss,g_gan,l_pde,l_ic,l_bc,l_rec,val_rel_l2
///   validation.csv   iter,val_rel_l2,val_l_ic,val_l_pde (including iteration 0 on a fresh run)
///   config.json      the effective configuration
/// With `resume`, continues from out_dir/checkpoint.brg and drops log rows past it.
/// A non-finite loss throws NumericError; the last checkpoint on disk is left untouched.
TrainSummary train(const TrainConfig& config, const Dataset& dataset, const std::filesystem::path& out_dir,
                   bool resume, std::ostream* progress = nullptr);

}  // namespace burgan::train
