#pragma once

#include "burgan/autodiff/mlp.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace burgan {

/// Network inputs see x / kXScale and t / kTScale; jets are reported in physical units.
inline constexpr double kXScale = 8.0;
inline constexpr double kTScale = 10.0;

inline constexpr std::size_t kIcDim = 512;
inline constexpr std::size_t kLatentDim = 32;
inline constexpr std::size_t kDefaultZDim = 16;
/// Generated samples the reconstructor consumes per initial condition.
inline constexpr std::size_t kReconstructorSamples = 64;

/// Layer layouts of the four networks. Approximator,
/// reconstructor and discriminator add a 256-wide projection and then a head
/// (scalar linear, 512 linear, scalar sigmoid respectively).
struct Architecture {
  std::size_t z_dim = kDefaultZDim;

  /// 512 -> 128 -> 128 (relu) -> 32
  [[nodiscard]] std::vector<ad::LayerSpec> encoder() const;
  /// [x, t, v, z] -> 5 x 256 tanh -> 256 tanh -> 1
  [[nodiscard]] std::vector<ad::LayerSpec> approximator() const;
  /// [x_1..x_64, t_1..t_64, u_1..u_64] -> 3 x 256 tanh -> 256 tanh -> 512
  [[nodiscard]] std::vector<ad::LayerSpec> reconstructor() const;
  /// [x, t, u, i] -> 3 x 256 relu -> 256 relu -> 1 sigmoid
  [[nodiscard]] std::vector<ad::LayerSpec> discriminator() const;
};

struct ModelParams {
  std::size_t z_dim = kDefaultZDim;
  ad::Mlp encoder;
  ad::Mlp approximator;
  ad::Mlp reconstructor;
  ad::Mlp discriminator;

  /// Glorot-uniform weights, zero biases, from a single seeded stream (networks in the order above).
  static ModelParams initialize(std::size_t z_dim, std::uint64_t seed);
  static ModelParams zeros(std::size_t z_dim);

  [[nodiscard]] Architecture architecture() const { return {z_dim}; }
  [[nodiscard]] std::size_t parameter_count() const;
  /// Throws ConfigError if any network deviates from architecture().
  void validate() const;

  /// Encoder, approximator and reconstructor parameters (the generator), W0, b0, ... per network.
  [[nodiscard]] std::vector<ad::Matrix*> generator_parameters();
  [[nodiscard]] std::vector<ad::Matrix*> discriminator_parameters();
};

using ICVector = std::vector<double>;
using LatentCode = std::vector<double>;
using NoiseVector = std::vector<double>;

struct SpaceTimePoint {
  double x = 0.0;
  double t = 0.0;
};

/// A generated value at a space-time point, as fed to the reconstructor.
struct GeneratedSample {
  double x = 0.0;
  double t = 0.0;
  double u = 0.0;
};

/// Standard normal draws.
NoiseVector draw_noise(std::mt19937_64& rng, std::size_t z_dim);

/// Deterministic 32-dim latent code of a 512-sample initial condition.
LatentCode encode(const ModelParams& params, std::span<const double> ic);

/// Generator output at one physical point. With jets, the derivatives are w.r.t. physical x and t;
/// without, only `value` is filled.
ad::Jet2 approximate(const ModelParams& params, std::span<const double> latent, double x, double t,
                     std::span<const double> z, bool with_jets);

/// One latent code (encode(ic)) and one noise vector shared across all points.
std::vector<double> generate(const ModelParams& params, std::span<const double> ic,
                             std::span<const SpaceTimePoint> points, std::span<const double> z);

/// Sorts samples by (t, x), the order the reconstructor is trained on. Stable for ties.
std::vector<GeneratedSample> canonical_order(std::span<const GeneratedSample> samples);

/// 512-vector estimate of the initial condition. Requires exactly 64 samples (ContractViolation
/// otherwise); input order does not matter.
ICVector reconstruct(const ModelParams& params, std::span<const GeneratedSample> samples);

/// Probability that (x, t, u, i) is a real tuple; always in (0, 1) (saturated outputs are
/// pulled in to the nearest representable interior value).
double discriminate(const ModelParams& params, double x, double t, double u, std::span<const double> ic);

/// Generator values on the tensor grid xs x ts (row n, column j = point (xs[j], ts[n])), batched
/// and tape-free. Used for inference over full fields.
ad::Matrix predict_grid(const ModelParams& params, std::span<const double> latent, std::span<const double> z,
                        std::span<const double> xs, std::span<const double> ts);

}  // namespace burgan
