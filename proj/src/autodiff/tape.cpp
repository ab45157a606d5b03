#include "burgan/autodiff/tape.hpp"

#include "burgan/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace burgan::ad {

Matrix make_matrix(Eigen::Index rows, Eigen::Index cols, std::span<const double> data) {
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw ConfigError("matrix data length " + std::to_string(data.size()) + " does not match " +
                      std::to_string(rows) + "x" + std::to_string(cols));
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  require_finite(m, "matrix construction");
  return m;
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw NumericError("non-finite value in " + std::string(what));
}

Tape& Var::tape() const {
  if (tape_ == nullptr) throw ContractViolation("use of an unbound Var");
  return *tape_;
}

const Matrix& Var::value() const { return tape().value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ContractViolation("scalar() on a non-1x1 node");
  return v(0, 0);
}

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  if (checked_) require_finite(value, "tape node " + std::to_string(nodes_.size()));
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad ? std::move(backward) : Backward{}, requires_grad});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, {}); }

Var Tape::variable(Matrix value) { return push(std::move(value), true, {}); }

Var Tape::record(Matrix value, std::span<const Var> operands, Backward backward) {
  bool needs = false;
  for (const Var& v : operands) {
    if (&v.tape() != this) throw ContractViolation("operands recorded on different tapes");
    needs = needs || nodes_[v.id()].requires_grad;
  }
  return push(std::move(value), needs, std::move(backward));
}

Var Tape::record(Matrix value, std::initializer_list<Var> operands, Backward backward) {
  return record(std::move(value), std::span<const Var>(operands.begin(), operands.size()), std::move(backward));
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractViolation("loss node belongs to another tape");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractViolation("backward() needs a scalar loss node, got " + std::to_string(lv.rows()) + "x" +
                            std::to_string(lv.cols()));
  }
  for (auto& node : nodes_) node.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;

  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || node.grad.size() == 0) continue;
    // upstream is read-only; operands have smaller ids so the deque slot is not touched
    node.backward(*this, node.grad);
  }
}

Matrix Tape::gradient(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.grad.size() == 0) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

std::vector<Matrix> reverse_gradient(Tape& tape, Var loss, std::span<const Var> params) {
  tape.backward(loss);
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (const Var& p : params) grads.push_back(tape.gradient(p));
  return grads;
}

namespace {

Tape& same_tape(Var a, Var b) {
  Tape& t = a.tape();
  if (&b.tape() != &t) throw ContractViolation("operands recorded on different tapes");
  return t;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) throw ConfigError("matmul: inner dimensions differ");
  Matrix out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var matmul_nt(Var a, Var w) {
  Tape& t = same_tape(a, w);
  const Matrix& av = a.value();
  const Matrix& wv = w.value();
  if (av.cols() != wv.cols()) {
    throw ConfigError("layer input width " + std::to_string(av.cols()) + " does not match weight in_dim " +
                      std::to_string(wv.cols()));
  }
  Matrix out(av.rows(), wv.rows());
  out.noalias() = av * wv.transpose();
  const std::size_t ia = a.id(), iw = w.id();
  return t.record(std::move(out), {a, w}, [ia, iw](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) {
      Matrix ga(g.rows(), tp.value(iw).cols());
      ga.noalias() = g * tp.value(iw);
      tp.accumulate(ia, ga);
    }
    if (tp.requires_grad(iw)) {
      Matrix gw(g.cols(), tp.value(ia).cols());
      gw.noalias() = g.transpose() * tp.value(ia);
      tp.accumulate(iw, gw);
    }
  });
}

Var affine(Var a, Var w, Var bias) {
  Tape& t = same_tape(a, w);
  same_tape(a, bias);
  const Matrix& av = a.value();
  const Matrix& wv = w.value();
  const Matrix& bv = bias.value();
  if (av.cols() != wv.cols()) {
    throw ConfigError("layer input width " + std::to_string(av.cols()) + " does not match weight in_dim " +
                      std::to_string(wv.cols()));
  }
  if (bv.rows() != 1 || bv.cols() != wv.rows()) throw ConfigError("affine: bias width mismatch");
  Matrix out(av.rows(), wv.rows());
  out.noalias() = av * wv.transpose();
  out.rowwise() += bv.row(0);
  const std::size_t ia = a.id(), iw = w.id(), ib = bias.id();
  return t.record(std::move(out), {a, w, bias}, [ia, iw, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) {
      Matrix ga(g.rows(), tp.value(iw).cols());
      ga.noalias() = g * tp.value(iw);
      tp.accumulate(ia, ga);
    }
    if (tp.requires_grad(iw)) {
      Matrix gw(g.cols(), tp.value(ia).cols());
      gw.noalias() = g.transpose() * tp.value(ia);
      tp.accumulate(iw, gw);
    }
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
  });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw ConfigError("add_row: bias width mismatch");
  Matrix out = av.rowwise() + rv.row(0);
  const std::size_t ia = a.id(), ir = row.id();
  return t.record(std::move(out), {a, row}, [ia, ir](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, g);
    if (tp.requires_grad(ir)) tp.accumulate(ir, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value() + b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value() - b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
  });
}

Var scale(Var a, double s) {
  Matrix out = a.value() * s;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, s](Tape& tp, const Matrix& g) { tp.accumulate(ia, g * s); });
}

Var add_scalar(Var a, double s) {
  Matrix out = a.value().array() + s;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& tp, const Matrix& g) { tp.accumulate(ia, g); });
}

Var square(Var a) {
  Matrix out = a.value().array().square();
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, (2.0 * g.array() * tp.value(ia).array()).matrix());
  });
}

Matrix tanh_values(const Matrix& z) {
  // 1 - 2 / (exp(2z) + 1) vectorizes where std::tanh does not; small |z| uses the series
  const auto x = z.array();
  const auto x2 = x.square();
  const auto series = x * (1.0 + x2 * (-1.0 / 3 + x2 * (2.0 / 15 + x2 * (-17.0 / 315))));
  const auto via_exp = 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
  return (x.abs() < 1e-2).select(series, via_exp).matrix();
}

Var tanh(Var a) {
  Matrix out = tanh_values(a.value());
  const std::size_t ia = a.id();
  // the closure reads its own output: capture the id record() is about to assign
  const std::size_t self = a.tape().size();
  return a.tape().record(std::move(out), {a}, [ia, self](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, (g.array() * (1.0 - tp.value(self).array().square())).matrix());
  });
}

Var sigmoid(Var a) {
  Matrix out = (1.0 + (-a.value().array()).exp()).inverse();
  const std::size_t ia = a.id();
  const std::size_t self = a.tape().size();
  return a.tape().record(std::move(out), {a}, [ia, self](Tape& tp, const Matrix& g) {
    const auto s = tp.value(self).array();
    tp.accumulate(ia, (g.array() * s * (1.0 - s)).matrix());
  });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, (tp.value(ia).array() > 0.0).select(g, 0.0));
  });
}

Var step(Var a) {
  Matrix out = (a.value().array() > 0.0).cast<double>();
  return a.tape().constant(std::move(out));
}

Var log(Var a) {
  Matrix out = a.value().array().log();
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, (g.array() / tp.value(ia).array()).matrix());
  });
}

Var clamp(Var a, double lo, double hi) {
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, lo, hi](Tape& tp, const Matrix& g) {
    const auto x = tp.value(ia).array();
    tp.accumulate(ia, (x > lo && x < hi).select(g, 0.0));
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return a.tape().record(std::move(out), {a}, [ia, r, c](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var mean(Var a) {
  const Eigen::Index r = a.rows(), c = a.cols();
  if (r * c == 0) throw ContractViolation("mean of an empty matrix");
  Matrix out(1, 1);
  out(0, 0) = a.value().mean();
  const std::size_t ia = a.id();
  const double inv = 1.0 / static_cast<double>(r * c);
  return a.tape().record(std::move(out), {a}, [ia, r, c, inv](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, Matrix::Constant(r, c, g(0, 0) * inv));
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractViolation("concat_cols of nothing");
  Tape& t = parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> widths;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ConfigError("concat_cols: row counts differ");
    ids.push_back(p.id());
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return t.record(std::move(out), parts, [ids, widths](Tape& tp, const Matrix& g) {
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.requires_grad(ids[k])) tp.accumulate(ids[k], g.middleCols(off, widths[k]));
      off += widths[k];
    }
  });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) throw ConfigError("slice_cols out of range");
  Matrix out = a.value().middleCols(begin, count);
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return a.tape().record(std::move(out), {a}, [ia, r, c, begin, count](Tape& tp, const Matrix& g) {
    Matrix full = Matrix::Zero(r, c);
    full.middleCols(begin, count) = g;
    tp.accumulate(ia, full);
  });
}

Var gather_rows(Var a, std::span<const Eigen::Index> indices) {
  const Matrix& av = a.value();
  Matrix out(static_cast<Eigen::Index>(indices.size()), av.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= av.rows()) throw ConfigError("gather_rows index out of range");
    out.row(static_cast<Eigen::Index>(i)) = av.row(indices[i]);
  }
  const std::size_t ia = a.id();
  const Eigen::Index r = av.rows(), c = av.cols();
  std::vector<Eigen::Index> idx(indices.begin(), indices.end());
  return a.tape().record(std::move(out), {a}, [ia, r, c, idx = std::move(idx)](Tape& tp, const Matrix& g) {
    Matrix full = Matrix::Zero(r, c);
    for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(ia, full);
  });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.rows() * a.cols()) throw ConfigError("reshape changes element count");
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return a.tape().record(std::move(out), {a}, [ia, r, c](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, Eigen::Map<const Matrix>(g.data(), r, c));
  });
}

}  // namespace burgan::ad
