#include "burgan/autodiff/jet.hpp"

#include "burgan/common/errors.hpp"

namespace burgan::ad {

Jet2 JetBatch::at(Eigen::Index r, Eigen::Index c) const {
  Jet2 j;
  j.value = value.value()(r, c);
  if (dx.valid()) j.d_dx = dx.value()(r, c);
  if (dt.valid()) j.d_dt = dt.value()(r, c);
  if (dxx.valid()) j.d2_dx2 = dxx.value()(r, c);
  return j;
}

namespace {

void check_channels(JetChannels channels) {
  if (channels.dxx && !channels.dx) throw ConfigError("second x-derivative channel requires the first");
}

Matrix seed_column(Eigen::Index rows, Eigen::Index cols, Eigen::Index col, double scale) {
  Matrix m = Matrix::Zero(rows, cols);
  m.col(col).setConstant(scale);
  return m;
}

}  // namespace

JetBatch seed_jets(Var inputs, Eigen::Index x_col, double x_scale, Eigen::Index t_col, double t_scale,
                   JetChannels channels) {
  check_channels(channels);
  const Eigen::Index rows = inputs.rows(), cols = inputs.cols();
  if (x_col < 0 || x_col >= cols || t_col < 0 || t_col >= cols) throw ConfigError("jet seed column out of range");
  Tape& tape = inputs.tape();
  JetBatch jets;
  jets.value = inputs;
  if (channels.dx) jets.dx = tape.constant(seed_column(rows, cols, x_col, x_scale));
  if (channels.dt) jets.dt = tape.constant(seed_column(rows, cols, t_col, t_scale));
  if (channels.dxx) jets.dxx = tape.constant(Matrix::Zero(rows, cols));
  return jets;
}

JetBatch seed_jets(Tape& tape, const Matrix& inputs, Eigen::Index x_col, double x_scale, Eigen::Index t_col,
                   double t_scale, JetChannels channels) {
  return seed_jets(tape.constant(inputs), x_col, x_scale, t_col, t_scale, channels);
}

JetBatch jet_linear(const JetBatch& in, Var weight, Var bias) {
  JetBatch out;
  out.value = affine(in.value, weight, bias);
  if (in.dx.valid()) out.dx = matmul_nt(in.dx, weight);
  if (in.dt.valid()) out.dt = matmul_nt(in.dt, weight);
  if (in.dxx.valid()) out.dxx = matmul_nt(in.dxx, weight);
  return out;
}

namespace {

// Fused tanh jet channels. With a = tanh(z), s1 = 1 - a^2 and s2 = -2 a s1:
//   first:  s1 z'                 (d/da = -2 a z')
//   second: s2 z'^2 + s1 z''      (d/da = (6 a^2 - 2) z'^2 - 2 a z'')
Var tanh_first(Var a, Var zp) {
  const auto av = a.value().array();
  Matrix out = ((1.0 - av.square()) * zp.value().array()).matrix();
  const std::size_t ia = a.id(), ip = zp.id();
  return a.tape().record(std::move(out), {a, zp}, [ia, ip](Tape& tp, const Matrix& g) {
    const auto av = tp.value(ia).array();
    if (tp.requires_grad(ip)) tp.accumulate(ip, (g.array() * (1.0 - av.square())).matrix());
    if (tp.requires_grad(ia)) tp.accumulate(ia, (-2.0 * g.array() * av * tp.value(ip).array()).matrix());
  });
}

Var tanh_second(Var a, Var zp, Var zpp) {
  const auto av = a.value().array();
  const auto s1 = 1.0 - av.square();
  const auto zpv = zp.value().array();
  Matrix out = (-2.0 * av * s1 * zpv.square() + s1 * zpp.value().array()).matrix();
  const std::size_t ia = a.id(), ip = zp.id(), ipp = zpp.id();
  return a.tape().record(std::move(out), {a, zp, zpp}, [ia, ip, ipp](Tape& tp, const Matrix& g) {
    const auto av = tp.value(ia).array();
    const auto s1 = 1.0 - av.square();
    const auto zpv = tp.value(ip).array();
    const auto ga = g.array();
    if (tp.requires_grad(ipp)) tp.accumulate(ipp, (ga * s1).matrix());
    if (tp.requires_grad(ip)) tp.accumulate(ip, (-4.0 * ga * av * s1 * zpv).matrix());
    if (tp.requires_grad(ia)) {
      tp.accumulate(ia, (ga * ((6.0 * av.square() - 2.0) * zpv.square() - 2.0 * av * tp.value(ipp).array())).matrix());
    }
  });
}

}  // namespace

JetBatch jet_activate(const JetBatch& in, Activation activation) {
  if (activation == Activation::identity) return in;

  JetBatch out;
  if (activation == Activation::tanh) {
    out.value = tanh(in.value);
    if (in.dx.valid()) out.dx = tanh_first(out.value, in.dx);
    if (in.dt.valid()) out.dt = tanh_first(out.value, in.dt);
    if (in.dxx.valid()) out.dxx = tanh_second(out.value, in.dx, in.dxx);
    return out;
  }

  Var d1;  // s'(z)
  Var d2;  // s''(z)
  switch (activation) {
    case Activation::sigmoid: {
      out.value = sigmoid(in.value);
      d1 = mul(out.value, add_scalar(scale(out.value, -1.0), 1.0));
      if (in.dxx.valid()) d2 = mul(d1, add_scalar(scale(out.value, -2.0), 1.0));
      break;
    }
    case Activation::relu: {
      out.value = relu(in.value);
      d1 = step(in.value);
      break;
    }
    case Activation::tanh:
    case Activation::identity:
      break;
  }

  if (in.dx.valid()) out.dx = mul(d1, in.dx);
  if (in.dt.valid()) out.dt = mul(d1, in.dt);
  if (in.dxx.valid()) {
    Var curvature = mul(d1, in.dxx);
    out.dxx = d2.valid() ? add(mul(d2, square(in.dx)), curvature) : curvature;
  }
  return out;
}

Var activate(Var z, Activation activation) {
  switch (activation) {
    case Activation::tanh:
      return tanh(z);
    case Activation::relu:
      return relu(z);
    case Activation::sigmoid:
      return sigmoid(z);
    case Activation::identity:
      return z;
  }
  return z;
}

void activate_inplace(Matrix& z, Activation activation) {
  switch (activation) {
    case Activation::tanh:
      z = tanh_values(z);
      break;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::sigmoid:
      z = (1.0 + (-z.array()).exp()).inverse();
      break;
    case Activation::identity:
      break;
  }
}

}  // namespace burgan::ad
