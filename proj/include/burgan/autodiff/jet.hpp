#pragma once

#include "burgan/autodiff/tape.hpp"

namespace burgan::ad {

/// Value of a scalar field together with the input derivatives the Burgers residual needs.
/// The mixed derivative d2/dxdt is not carried.
struct Jet2 {
  double value = 0.0;
  double d_dx = 0.0;
  double d_dt = 0.0;
  double d2_dx2 = 0.0;
};

/// Which derivative channels to propagate. d2/dx2 needs d/dx.
struct JetChannels {
  bool dx = true;
  bool dt = true;
  bool dxx = true;

  static constexpr JetChannels full() { return {true, true, true}; }
  static constexpr JetChannels value_only() { return {false, false, false}; }
  static constexpr JetChannels first_x() { return {true, false, false}; }
};

/// A batch of jets, one row per sample. Each channel is an ordinary tape node, so a reverse
/// sweep from any function of the channels yields parameter gradients.
/// Channels not requested are invalid Vars.
struct JetBatch {
  Var value;
  Var dx;
  Var dt;
  Var dxx;

  [[nodiscard]] Eigen::Index rows() const { return value.rows(); }
  [[nodiscard]] JetChannels channels() const { return {dx.valid(), dt.valid(), dxx.valid()}; }
  /// Jet of row `r`, column `c`; missing channels read as zero.
  [[nodiscard]] Jet2 at(Eigen::Index r, Eigen::Index c = 0) const;
};

enum class Activation { tanh, relu, sigmoid, identity };

/// Seeds a jet batch from raw inputs. Column `x_col` carries d/dx = x_scale and column
/// `t_col` carries d/dt = t_scale; every other column is constant. Second derivatives start at 0.
/// Seeding with x_scale = 1/L lets a network consume x/L while the jets stay in physical units.
JetBatch seed_jets(Tape& tape, const Matrix& inputs, Eigen::Index x_col, double x_scale, Eigen::Index t_col,
                   double t_scale, JetChannels channels);

/// Same, but the input values are an existing tape node (e.g. a latent code fed by an encoder).
JetBatch seed_jets(Var inputs, Eigen::Index x_col, double x_scale, Eigen::Index t_col, double t_scale,
                   JetChannels channels);

/// in * W^T + b. Derivative channels are linear, so they skip the bias.
JetBatch jet_linear(const JetBatch& in, Var weight, Var bias);

/// Elementwise activation with chain rule:
///   a' = s'(z) z',  a'' = s''(z) z'^2 + s'(z) z''.
/// relu has s'' = 0 everywhere, including the kink.
JetBatch jet_activate(const JetBatch& in, Activation activation);

/// Plain activation on a tape node.
Var activate(Var z, Activation activation);

/// Plain activation on a matrix, no tape.
void activate_inplace(Matrix& z, Activation activation);

}  // namespace burgan::ad
