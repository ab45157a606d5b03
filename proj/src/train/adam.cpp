#include "burgan/train/adam.hpp"

#include "burgan/common/binary_io.hpp"
#include "burgan/common/errors.hpp"

#include <cmath>

namespace burgan::train {

using ad::Matrix;

AdamState AdamState::like(std::span<Matrix* const> params) {
  AdamState s;
  for (const Matrix* p : params) {
    s.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    s.v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return s;
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamSettings& settings) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ConfigError("adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix& p = *params[k];
    if (grads[k].rows() != p.rows() || grads[k].cols() != p.cols() || state.m[k].rows() != p.rows() ||
        state.m[k].cols() != p.cols() || state.v[k].rows() != p.rows() || state.v[k].cols() != p.cols()) {
      throw ConfigError("adam_step: shape mismatch at parameter " + std::to_string(k));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(settings.beta1, t);
  const double c2 = 1.0 - std::pow(settings.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = settings.beta1 * state.m[k] + (1.0 - settings.beta1) * grads[k];
    state.v[k] = settings.beta2 * state.v[k] + (1.0 - settings.beta2) * grads[k].cwiseAbs2();
    params[k]->array() -=
        settings.lr * (state.m[k].array() / c1) / ((state.v[k].array() / c2).sqrt() + settings.eps);
  }
}

double global_norm(std::span<const Matrix> grads) {
  double acc = 0.0;
  for (const Matrix& g : grads) acc += g.squaredNorm();
  return std::sqrt(acc);
}

double clip_global_norm(std::span<Matrix> grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Matrix& g : grads) g *= s;
  }
  return norm;
}

std::string serialize_adam(const AdamState& state) {
  BinaryWriter w;
  w.u64(state.step);
  w.u64(state.m.size());
  for (std::size_t k = 0; k < state.m.size(); ++k) {
    w.u64(static_cast<std::uint64_t>(state.m[k].rows()));
    w.u64(static_cast<std::uint64_t>(state.m[k].cols()));
    w.f64s({state.m[k].data(), static_cast<std::size_t>(state.m[k].size())});
    w.f64s({state.v[k].data(), static_cast<std::size_t>(state.v[k].size())});
  }
  return w.buffer();
}

AdamState parse_adam(const std::string& data, std::span<Matrix* const> params) {
  BinaryReader r(data, "optimizer state");
  AdamState s = AdamState::like(params);
  s.step = r.u64();
  if (r.u64() != params.size()) throw IoError("optimizer state: parameter count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    if (rows != params[k]->rows() || cols != params[k]->cols()) {
      throw IoError("optimizer state: shape mismatch at parameter " + std::to_string(k));
    }
    r.f64s({s.m[k].data(), static_cast<std::size_t>(s.m[k].size())});
    r.f64s({s.v[k].data(), static_cast<std::size_t>(s.v[k].size())});
  }
  if (!r.at_end()) throw IoError("optimizer state: trailing bytes");
  return s;
}

}  // namespace burgan::train
