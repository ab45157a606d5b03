#include "burgan/model/graph.hpp"

#include "burgan/common/errors.hpp"

#include <string>

namespace burgan::graph {

using ad::Matrix;
using ad::Var;

std::vector<Var> BoundGenerator::parameters() const {
  std::vector<Var> out = encoder.parameters();
  for (const Var& v : approximator.parameters()) out.push_back(v);
  for (const Var& v : reconstructor.parameters()) out.push_back(v);
  return out;
}

BoundGenerator bind_generator(ad::Tape& tape, const ModelParams& params, bool trainable) {
  return {ad::bind(tape, params.encoder, trainable), ad::bind(tape, params.approximator, trainable),
          ad::bind(tape, params.reconstructor, trainable)};
}

Var encode(const ad::BoundMlp& encoder, Var ics) { return ad::mlp_forward(encoder, ics); }

ad::JetBatch approximate(const ad::BoundMlp& approximator, Var latents, std::span<const Eigen::Index> latent_of_row,
                         const Matrix& noise, std::span<const double> x, std::span<const double> t,
                         ad::JetChannels channels) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (t.size() != x.size() || latent_of_row.size() != x.size() || noise.rows() != n) {
    throw ConfigError("approximate: batch sizes disagree");
  }
  ad::Tape& tape = latents.tape();
  Matrix coords(n, 2);
  for (Eigen::Index r = 0; r < n; ++r) {
    coords(r, 0) = x[static_cast<std::size_t>(r)] / kXScale;
    coords(r, 1) = t[static_cast<std::size_t>(r)] / kTScale;
  }
  const std::vector<Var> parts{tape.constant(std::move(coords)), ad::gather_rows(latents, latent_of_row),
                               tape.constant(noise)};
  const ad::JetBatch seeded = ad::seed_jets(ad::concat_cols(parts), 0, 1.0 / kXScale, 1, 1.0 / kTScale, channels);
  return ad::mlp_jet_forward(approximator, seeded);
}

Var reconstruct(const ad::BoundMlp& reconstructor, const Matrix& xs, const Matrix& ts, Var u) {
  if (xs.rows() != u.rows() || ts.rows() != u.rows() || xs.cols() != u.cols() || ts.cols() != u.cols()) {
    throw ConfigError("reconstruct: coordinate and value blocks disagree");
  }
  if (static_cast<std::size_t>(u.cols()) != kReconstructorSamples) {
    throw ContractViolation("reconstructor needs exactly 64 samples per IC, got " + std::to_string(u.cols()));
  }
  ad::Tape& tape = u.tape();
  const std::vector<Var> parts{tape.constant(xs / kXScale), tape.constant(ts / kTScale), u};
  return ad::mlp_forward(reconstructor, ad::concat_cols(parts));
}

Var discriminate(const ad::BoundMlp& discriminator, std::span<const double> x, std::span<const double> t, Var u,
                 const Matrix& ics, std::span<const Eigen::Index> ic_of_row) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (t.size() != x.size() || ic_of_row.size() != x.size() || u.rows() != n || u.cols() != 1) {
    throw ConfigError("discriminate: batch sizes disagree");
  }
  if (discriminator.layers.empty()) throw ConfigError("discriminator has no layers");
  const ad::BoundLayer& first = discriminator.layers.front();
  if (first.weight.cols() != 3 + ics.cols()) throw ConfigError("discriminator input width mismatch");

  ad::Tape& tape = u.tape();
  Matrix coords(n, 2);
  for (Eigen::Index r = 0; r < n; ++r) {
    coords(r, 0) = x[static_cast<std::size_t>(r)] / kXScale;
    coords(r, 1) = t[static_cast<std::size_t>(r)] / kTScale;
  }
  const std::vector<Var> xtu_parts{tape.constant(std::move(coords)), u};
  Var xtu = ad::concat_cols(xtu_parts);
  Var w_xtu = ad::slice_cols(first.weight, 0, 3);
  Var w_ic = ad::slice_cols(first.weight, 3, ics.cols());
  Var per_ic = ad::matmul_nt(tape.constant(ics), w_ic);
  Var z = ad::add_row(ad::add(ad::matmul_nt(xtu, w_xtu), ad::gather_rows(per_ic, ic_of_row)), first.bias);
  Var a = ad::activate(z, first.activation);

  ad::BoundMlp rest;
  rest.layers.assign(discriminator.layers.begin() + 1, discriminator.layers.end());
  return rest.layers.empty() ? a : ad::mlp_forward(rest, a);
}

}  // namespace burgan::graph
