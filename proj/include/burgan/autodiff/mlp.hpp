#pragma once

#include "burgan/autodiff/jet.hpp"
#include "burgan/autodiff/tape.hpp"

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace burgan::ad {

struct LayerSpec {
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  Activation activation = Activation::identity;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Layer {
  Matrix weight;  // out_dim x in_dim
  Matrix bias;    // 1 x out_dim
  Activation activation = Activation::identity;

  [[nodiscard]] LayerSpec spec() const;
};

/// Fully connected network: a chain of affine maps each followed by its activation.
struct Mlp {
  std::vector<Layer> layers;

  /// Zero-initialized network; throws ConfigError if dims are < 1 or do not chain.
  static Mlp zeros(std::span<const LayerSpec> specs);
  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(std::span<const LayerSpec> specs, std::mt19937_64& rng);

  [[nodiscard]] std::size_t in_dim() const;
  [[nodiscard]] std::size_t out_dim() const;
  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] std::vector<LayerSpec> specs() const;

  /// Weight and bias of every layer in order: W0, b0, W1, b1, ...
  [[nodiscard]] std::vector<Matrix*> parameters();
  [[nodiscard]] std::vector<const Matrix*> parameters() const;
};

/// Throws ConfigError unless every dim is >= 1 and consecutive layers chain.
void validate_specs(std::span<const LayerSpec> specs);

/// Network parameters placed on a tape.
struct BoundLayer {
  Var weight;
  Var bias;
  Activation activation = Activation::identity;
};

struct BoundMlp {
  std::vector<BoundLayer> layers;

  /// W0, b0, W1, b1, ... in the same order as Mlp::parameters().
  [[nodiscard]] std::vector<Var> parameters() const;
};

/// Copies the parameters onto `tape`, as variables when `trainable`, else constants.
BoundMlp bind(Tape& tape, const Mlp& net, bool trainable);

/// Batched forward pass, one sample per row. Throws ConfigError on a width mismatch and
/// NumericError naming the layer when an intermediate goes non-finite.
Var mlp_forward(const BoundMlp& net, Var input);

/// Forward pass of a jet batch through every layer.
JetBatch mlp_jet_forward(const BoundMlp& net, const JetBatch& input);

/// Tape-free evaluation for inference.
Matrix mlp_evaluate(const Mlp& net, const Matrix& input);

/// Jets of a scalar-output network whose inputs are laid out [x, t, rest...], with x and t
/// seeded directly (unit scale). `rest` is held constant.
Jet2 jet_forward(const Mlp& net, std::span<const double> rest, double x, double t);

}  // namespace burgan::ad
