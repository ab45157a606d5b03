#include "burgan/train/losses.hpp"

#include "burgan/common/errors.hpp"

#include <cmath>

namespace burgan::train {

using ad::Var;

void LossWeights::validate() const {
  const std::pair<const char*, double> all[] = {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"delta", delta}};
  for (const auto& [name, w] : all) {
    if (!std::isfinite(w) || w < 0) throw ConfigError(std::string("loss weight ") + name + " must be finite and >= 0");
  }
}

Var loss_pde(const ad::JetBatch& u, double nu) {
  if (!u.dx.valid() || !u.dt.valid() || !u.dxx.valid()) {
    throw ContractViolation("loss_pde needs the dx, dt and dxx jet channels");
  }
  const Var residual = u.dt - nu * u.dxx + ad::mul(u.value, u.dx);
  return ad::mean(ad::square(residual));
}

Var loss_ic(Var u_pred, const ad::Matrix& u_true) {
  if (u_pred.rows() != u_true.rows() || u_pred.cols() != u_true.cols()) {
    throw ConfigError("loss_ic: prediction and target shapes differ");
  }
  return ad::mean(ad::square(u_pred - u_pred.tape().constant(u_true)));
}

Var loss_bc(const ad::JetBatch& upper, const ad::JetBatch& lower) {
  if (!upper.dx.valid() || !lower.dx.valid()) throw ContractViolation("loss_bc needs the dx jet channel");
  if (upper.rows() != lower.rows()) throw ConfigError("loss_bc: boundary batches differ in size");
  return ad::mean(ad::square(upper.value - lower.value) + ad::square(upper.dx - lower.dx));
}

Var loss_reconstruction(Var i_hat, const ad::Matrix& ics) {
  if (i_hat.rows() != ics.rows() || i_hat.cols() != ics.cols()) {
    throw ConfigError("loss_reconstruction: estimate and target shapes differ");
  }
  return ad::mean(ad::square(i_hat - i_hat.tape().constant(ics)));
}

Var gan_discriminator_loss(Var d_real, Var d_fake) {
  const Var log_real = ad::log(ad::clamp(d_real, kProbFloor, 1.0 - kProbFloor));
  // 1 - D(fake) = -D(fake) + 1
  const Var log_fake = ad::log(ad::add_scalar(-1.0 * ad::clamp(d_fake, kProbFloor, 1.0 - kProbFloor), 1.0));
  return -1.0 * ad::mean(log_real) - ad::mean(log_fake);
}

Var gan_generator_loss(Var d_fake) { return -1.0 * ad::mean(ad::log(ad::clamp(d_fake, kProbFloor, 1.0 - kProbFloor))); }

Var total_generator_loss(const LossTerms& terms, const LossWeights& weights) {
  return terms.g_gan + weights.alpha * terms.pde + weights.beta * terms.ic + weights.gamma * terms.bc +
         weights.delta * terms.rec;
}

double total_generator_loss(double g_gan, double pde, double ic, double bc, double rec, const LossWeights& weights) {
  return g_gan + weights.alpha * pde + weights.beta * ic + weights.gamma * bc + weights.delta * rec;
}

}  // namespace burgan::train
