#pragma once

// Batched tape-level versions of the four networks, used by training and gradient checks.

#include "burgan/autodiff/jet.hpp"
#include "burgan/autodiff/mlp.hpp"
#include "burgan/model/model.hpp"

#include <span>

namespace burgan::graph {

struct BoundGenerator {
  ad::BoundMlp encoder;
  ad::BoundMlp approximator;
  ad::BoundMlp reconstructor;

  [[nodiscard]] std::vector<ad::Var> parameters() const;
};

BoundGenerator bind_generator(ad::Tape& tape, const ModelParams& params, bool trainable);

/// ics: B x 512 -> B x 32
ad::Var encode(const ad::BoundMlp& encoder, ad::Var ics);

/// Generator jets at N physical points. Row r uses latent row latent_of_row[r] of `latents`
/// and noise row r of `noise`.
ad::JetBatch approximate(const ad::BoundMlp& approximator, ad::Var latents, std::span<const Eigen::Index> latent_of_row,
                         const ad::Matrix& noise, std::span<const double> x, std::span<const double> t,
                         ad::JetChannels channels);

/// xs, ts: B x 64 physical coordinates in canonical order; u: B x 64 generated values.
/// Returns B x 512.
ad::Var reconstruct(const ad::BoundMlp& reconstructor, const ad::Matrix& xs, const ad::Matrix& ts, ad::Var u);

/// D(x, t, u, i) for N tuples; row r is conditioned on row ic_of_row[r] of `ics` (B x 512).
/// The first layer is applied as W_xtu [x t u]^T + W_i i, with W_i i computed once per IC.
/// Returns N x 1 probabilities.
ad::Var discriminate(const ad::BoundMlp& discriminator, std::span<const double> x, std::span<const double> t, ad::Var u,
                     const ad::Matrix& ics, std::span<const Eigen::Index> ic_of_row);

}  // namespace burgan::graph
