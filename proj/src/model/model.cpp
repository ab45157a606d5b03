#include "burgan/model/model.hpp"

#include "burgan/common/errors.hpp"
#include "burgan/model/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace burgan {

using ad::Activation;
using ad::LayerSpec;
using ad::Matrix;

namespace {

std::vector<LayerSpec> stack(std::size_t in, std::size_t hidden_layers, std::size_t width, Activation act) {
  std::vector<LayerSpec> specs;
  for (std::size_t k = 0; k < hidden_layers; ++k) {
    specs.push_back({k == 0 ? in : width, width, act});
  }
  return specs;
}

void check_network(const ad::Mlp& net, const std::vector<LayerSpec>& expected, const char* name) {
  if (net.specs() != expected) throw ConfigError(std::string(name) + " does not match the architecture");
  for (const ad::Layer& l : net.layers) {
    if (l.bias.rows() != 1 || l.bias.cols() != l.weight.rows()) {
      throw ConfigError(std::string(name) + " has a malformed bias");
    }
  }
}

constexpr std::size_t kPredictChunk = 4096;

}  // namespace

std::vector<LayerSpec> Architecture::encoder() const {
  auto specs = stack(kIcDim, 2, 128, Activation::relu);
  specs.push_back({128, kLatentDim, Activation::identity});
  return specs;
}

std::vector<LayerSpec> Architecture::approximator() const {
  auto specs = stack(2 + kLatentDim + z_dim, 5, 256, Activation::tanh);
  specs.push_back({256, 256, Activation::tanh});
  specs.push_back({256, 1, Activation::identity});
  return specs;
}

std::vector<LayerSpec> Architecture::reconstructor() const {
  auto specs = stack(3 * kReconstructorSamples, 3, 256, Activation::tanh);
  specs.push_back({256, 256, Activation::tanh});
  specs.push_back({256, kIcDim, Activation::identity});
  return specs;
}

std::vector<LayerSpec> Architecture::discriminator() const {
  auto specs = stack(3 + kIcDim, 3, 256, Activation::relu);
  specs.push_back({256, 256, Activation::relu});
  specs.push_back({256, 1, Activation::sigmoid});
  return specs;
}

ModelParams ModelParams::initialize(std::size_t z_dim, std::uint64_t seed) {
  if (z_dim < 1) throw ConfigError("z_dim must be >= 1");
  const Architecture arch{z_dim};
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.z_dim = z_dim;
  p.encoder = ad::Mlp::glorot(arch.encoder(), rng);
  p.approximator = ad::Mlp::glorot(arch.approximator(), rng);
  p.reconstructor = ad::Mlp::glorot(arch.reconstructor(), rng);
  p.discriminator = ad::Mlp::glorot(arch.discriminator(), rng);
  return p;
}

ModelParams ModelParams::zeros(std::size_t z_dim) {
  if (z_dim < 1) throw ConfigError("z_dim must be >= 1");
  const Architecture arch{z_dim};
  ModelParams p;
  p.z_dim = z_dim;
  p.encoder = ad::Mlp::zeros(arch.encoder());
  p.approximator = ad::Mlp::zeros(arch.approximator());
  p.reconstructor = ad::Mlp::zeros(arch.reconstructor());
  p.discriminator = ad::Mlp::zeros(arch.discriminator());
  return p;
}

std::size_t ModelParams::parameter_count() const {
  return encoder.parameter_count() + approximator.parameter_count() + reconstructor.parameter_count() +
         discriminator.parameter_count();
}

void ModelParams::validate() const {
  const Architecture arch = architecture();
  check_network(encoder, arch.encoder(), "encoder");
  check_network(approximator, arch.approximator(), "approximator");
  check_network(reconstructor, arch.reconstructor(), "reconstructor");
  check_network(discriminator, arch.discriminator(), "discriminator");
}

std::vector<Matrix*> ModelParams::generator_parameters() {
  std::vector<Matrix*> out = encoder.parameters();
  for (Matrix* m : approximator.parameters()) out.push_back(m);
  for (Matrix* m : reconstructor.parameters()) out.push_back(m);
  return out;
}

std::vector<Matrix*> ModelParams::discriminator_parameters() { return discriminator.parameters(); }

NoiseVector draw_noise(std::mt19937_64& rng, std::size_t z_dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  NoiseVector z(z_dim);
  for (double& v : z) v = normal(rng);
  return z;
}

LatentCode encode(const ModelParams& params, std::span<const double> ic) {
  if (ic.size() != kIcDim) throw ConfigError("encode expects 512 IC samples, got " + std::to_string(ic.size()));
  const Matrix in = Eigen::Map<const Matrix>(ic.data(), 1, static_cast<Eigen::Index>(ic.size()));
  const Matrix v = ad::mlp_evaluate(params.encoder, in);
  return {v.data(), v.data() + v.size()};
}

ad::Jet2 approximate(const ModelParams& params, std::span<const double> latent, double x, double t,
                     std::span<const double> z, bool with_jets) {
  if (latent.size() != kLatentDim) throw ConfigError("latent code must have 32 entries");
  if (z.size() != params.z_dim) throw ConfigError("noise vector has the wrong length");
  ad::Tape tape;
  const ad::BoundMlp net = ad::bind(tape, params.approximator, false);
  ad::Var latents = tape.constant(Eigen::Map<const Matrix>(latent.data(), 1, static_cast<Eigen::Index>(latent.size())));
  const Matrix noise = Eigen::Map<const Matrix>(z.data(), 1, static_cast<Eigen::Index>(z.size()));
  const std::vector<Eigen::Index> rows{0};
  const double xs[] = {x};
  const double ts[] = {t};
  const auto channels = with_jets ? ad::JetChannels::full() : ad::JetChannels::value_only();
  return graph::approximate(net, latents, rows, noise, xs, ts, channels).at(0);
}

std::vector<double> generate(const ModelParams& params, std::span<const double> ic,
                             std::span<const SpaceTimePoint> points, std::span<const double> z) {
  if (z.size() != params.z_dim) throw ConfigError("noise vector has the wrong length");
  const LatentCode v = encode(params, ic);
  std::vector<double> xs, ts;
  for (const auto& p : points) {
    xs.push_back(p.x);
    ts.push_back(p.t);
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  Matrix in(n, static_cast<Eigen::Index>(2 + kLatentDim + params.z_dim));
  for (Eigen::Index r = 0; r < n; ++r) {
    in(r, 0) = xs[static_cast<std::size_t>(r)] / kXScale;
    in(r, 1) = ts[static_cast<std::size_t>(r)] / kTScale;
    for (std::size_t k = 0; k < kLatentDim; ++k) in(r, static_cast<Eigen::Index>(2 + k)) = v[k];
    for (std::size_t k = 0; k < params.z_dim; ++k) in(r, static_cast<Eigen::Index>(2 + kLatentDim + k)) = z[k];
  }
  const Matrix out = ad::mlp_evaluate(params.approximator, in);
  return {out.data(), out.data() + out.size()};
}

std::vector<GeneratedSample> canonical_order(std::span<const GeneratedSample> samples) {
  std::vector<GeneratedSample> out(samples.begin(), samples.end());
  std::stable_sort(out.begin(), out.end(), [](const GeneratedSample& l, const GeneratedSample& r) {
    return l.t != r.t ? l.t < r.t : l.x < r.x;
  });
  return out;
}

ICVector reconstruct(const ModelParams& params, std::span<const GeneratedSample> samples) {
  if (samples.size() != kReconstructorSamples) {
    throw ContractViolation("reconstructor needs exactly 64 samples, got " + std::to_string(samples.size()));
  }
  const auto sorted = canonical_order(samples);
  const auto n = static_cast<Eigen::Index>(kReconstructorSamples);
  Matrix in(1, 3 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& s = sorted[static_cast<std::size_t>(k)];
    in(0, k) = s.x / kXScale;
    in(0, n + k) = s.t / kTScale;
    in(0, 2 * n + k) = s.u;
  }
  const Matrix out = ad::mlp_evaluate(params.reconstructor, in);
  return {out.data(), out.data() + out.size()};
}

double discriminate(const ModelParams& params, double x, double t, double u, std::span<const double> ic) {
  if (ic.size() != kIcDim) throw ConfigError("discriminate expects 512 IC samples");
  Matrix in(1, static_cast<Eigen::Index>(3 + kIcDim));
  in(0, 0) = x / kXScale;
  in(0, 1) = t / kTScale;
  in(0, 2) = u;
  for (std::size_t k = 0; k < kIcDim; ++k) in(0, static_cast<Eigen::Index>(3 + k)) = ic[k];
  const double p = ad::mlp_evaluate(params.discriminator, in)(0, 0);
  // a saturated sigmoid rounds to exactly 0 or 1 in double precision
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

Matrix predict_grid(const ModelParams& params, std::span<const double> latent, std::span<const double> z,
                    std::span<const double> xs, std::span<const double> ts) {
  if (latent.size() != kLatentDim) throw ConfigError("latent code must have 32 entries");
  if (z.size() != params.z_dim) throw ConfigError("noise vector has the wrong length");
  const std::size_t nx = xs.size(), nt = ts.size(), total = nx * nt;
  const auto width = static_cast<Eigen::Index>(2 + kLatentDim + params.z_dim);
  Matrix out(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nx));
  for (std::size_t begin = 0; begin < total; begin += kPredictChunk) {
    const std::size_t count = std::min(kPredictChunk, total - begin);
    Matrix in(static_cast<Eigen::Index>(count), width);
    for (std::size_t q = 0; q < count; ++q) {
      const std::size_t idx = begin + q;
      const auto r = static_cast<Eigen::Index>(q);
      in(r, 0) = xs[idx % nx] / kXScale;
      in(r, 1) = ts[idx / nx] / kTScale;
      for (std::size_t k = 0; k < kLatentDim; ++k) in(r, static_cast<Eigen::Index>(2 + k)) = latent[k];
      for (std::size_t k = 0; k < z.size(); ++k) in(r, static_cast<Eigen::Index>(2 + kLatentDim + k)) = z[k];
    }
    const Matrix u = ad::mlp_evaluate(params.approximator, in);
    for (std::size_t q = 0; q < count; ++q) out.data()[begin + q] = u(static_cast<Eigen::Index>(q), 0);
  }
  return out;
}

}  // namespace burgan
