#include "burgan/autodiff/mlp.hpp"

#include "burgan/common/errors.hpp"

#include <cmath>
#include <string>

namespace burgan::ad {

LayerSpec Layer::spec() const {
  return {static_cast<std::size_t>(weight.cols()), static_cast<std::size_t>(weight.rows()), activation};
}

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].in_dim < 1 || specs[k].out_dim < 1) {
      throw ConfigError("layer " + std::to_string(k) + " has a zero dimension");
    }
    if (k > 0 && specs[k].in_dim != specs[k - 1].out_dim) {
      throw ConfigError("layer " + std::to_string(k) + " in_dim " + std::to_string(specs[k].in_dim) +
                        " does not match previous out_dim " + std::to_string(specs[k - 1].out_dim));
    }
  }
}

Mlp Mlp::zeros(std::span<const LayerSpec> specs) {
  validate_specs(specs);
  Mlp net;
  for (const LayerSpec& s : specs) {
    const auto out = static_cast<Eigen::Index>(s.out_dim), in = static_cast<Eigen::Index>(s.in_dim);
    net.layers.push_back(Layer{Matrix::Zero(out, in), Matrix::Zero(1, out), s.activation});
  }
  return net;
}

Mlp Mlp::glorot(std::span<const LayerSpec> specs, std::mt19937_64& rng) {
  Mlp net = zeros(specs);
  for (Layer& layer : net.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
  }
  return net;
}

std::size_t Mlp::in_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols()); }

std::size_t Mlp::out_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows()); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<LayerSpec> Mlp::specs() const {
  std::vector<LayerSpec> out;
  for (const Layer& l : layers) out.push_back(l.spec());
  return out;
}

std::vector<Matrix*> Mlp::parameters() {
  std::vector<Matrix*> out;
  for (Layer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Matrix*> Mlp::parameters() const {
  std::vector<const Matrix*> out;
  for (const Layer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<Var> BoundMlp::parameters() const {
  std::vector<Var> out;
  for (const BoundLayer& l : layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

BoundMlp bind(Tape& tape, const Mlp& net, bool trainable) {
  BoundMlp bound;
  for (const Layer& l : net.layers) {
    if (trainable) {
      bound.layers.push_back({tape.variable(l.weight), tape.variable(l.bias), l.activation});
    } else {
      bound.layers.push_back({tape.constant(l.weight), tape.constant(l.bias), l.activation});
    }
  }
  return bound;
}

Var mlp_forward(const BoundMlp& net, Var input) {
  Var a = input;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const BoundLayer& l = net.layers[k];
    if (a.cols() != l.weight.cols()) {
      throw ConfigError("layer " + std::to_string(k) + " expects width " + std::to_string(l.weight.cols()) + ", got " +
                        std::to_string(a.cols()));
    }
    a = activate(affine(a, l.weight, l.bias), l.activation);
    if (!a.value().allFinite()) throw NumericError("non-finite activation in layer " + std::to_string(k));
  }
  return a;
}

JetBatch mlp_jet_forward(const BoundMlp& net, const JetBatch& input) {
  JetBatch j = input;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const BoundLayer& l = net.layers[k];
    if (j.value.cols() != l.weight.cols()) {
      throw ConfigError("layer " + std::to_string(k) + " expects width " + std::to_string(l.weight.cols()) + ", got " +
                        std::to_string(j.value.cols()));
    }
    j = jet_activate(jet_linear(j, l.weight, l.bias), l.activation);
    if (!j.value.value().allFinite()) throw NumericError("non-finite activation in layer " + std::to_string(k));
  }
  return j;
}

Matrix mlp_evaluate(const Mlp& net, const Matrix& input) {
  Matrix a = input;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const Layer& l = net.layers[k];
    if (a.cols() != l.weight.cols()) {
      throw ConfigError("layer " + std::to_string(k) + " expects width " + std::to_string(l.weight.cols()) + ", got " +
                        std::to_string(a.cols()));
    }
    Matrix z(a.rows(), l.weight.rows());
    z.noalias() = a * l.weight.transpose();
    z.rowwise() += l.bias.row(0);
    activate_inplace(z, l.activation);
    a = std::move(z);
  }
  return a;
}

Jet2 jet_forward(const Mlp& net, std::span<const double> rest, double x, double t) {
  if (net.out_dim() != 1) throw ConfigError("jet_forward needs a scalar-output network");
  if (net.in_dim() != rest.size() + 2) throw ConfigError("jet_forward input width mismatch");
  Tape tape;
  Matrix in(1, static_cast<Eigen::Index>(rest.size() + 2));
  in(0, 0) = x;
  in(0, 1) = t;
  for (std::size_t k = 0; k < rest.size(); ++k) in(0, static_cast<Eigen::Index>(k + 2)) = rest[k];
  const BoundMlp bound = bind(tape, net, false);
  const JetBatch out = mlp_jet_forward(bound, seed_jets(tape, in, 0, 1.0, 1, 1.0, JetChannels::full()));
  return out.at(0);
}

}  // namespace burgan::ad
