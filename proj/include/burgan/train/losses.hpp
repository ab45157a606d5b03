#pragma once

#include "burgan/autodiff/jet.hpp"
#include "burgan/autodiff/tape.hpp"

namespace burgan::train {

/// D outputs are clamped to [kProbFloor, 1 - kProbFloor] before taking logs.
inline constexpr double kProbFloor = 1e-7;

struct LossWeights {
  double alpha = 1.0;  // PDE residual
  double beta = 1.0;   // initial condition
  double gamma = 1.0;  // periodic boundary
  double delta = 1.0;  // reconstruction

  /// Throws ConfigError unless every weight is finite and >= 0.
  void validate() const;
};

/// mean over rows of (u_t - nu u_xx + u u_x)^2. Needs all jet channels.
ad::Var loss_pde(const ad::JetBatch& u, double nu);

/// mean over rows of (u_pred - u_true)^2; u_pred is N x 1.
ad::Var loss_ic(ad::Var u_pred, const ad::Matrix& u_true);

/// Row r of `upper` and `lower` are the generator at (x_UB, t_r) and (x_LB, t_r).
/// mean over r of (u_UB - u_LB)^2 + (u_x,UB - u_x,LB)^2. Needs the dx channel.
ad::Var loss_bc(const ad::JetBatch& upper, const ad::JetBatch& lower);

/// mean over every entry of (i - i_hat)^2; both B x 512.
ad::Var loss_reconstruction(ad::Var i_hat, const ad::Matrix& ics);

/// -mean log D(real) - mean log(1 - D(fake)).
ad::Var gan_discriminator_loss(ad::Var d_real, ad::Var d_fake);
/// Non-saturating generator loss -mean log D(fake).
ad::Var gan_generator_loss(ad::Var d_fake);

struct LossTerms {
  ad::Var g_gan;
  ad::Var pde;
  ad::Var ic;
  ad::Var bc;
  ad::Var rec;
};

/// g_gan + alpha L_PDE + beta L_IC + gamma L_BC + delta L_r.
ad::Var total_generator_loss(const LossTerms& terms, const LossWeights& weights);

/// Same combination on plain numbers, in the same order of operations.
double total_generator_loss(double g_gan, double pde, double ic, double bc, double rec, const LossWeights& weights);

}  // namespace burgan::train
