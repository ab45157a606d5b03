#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace burgan::ad {

/// Dense row-major 64-bit matrix. Layer weights are stored out_dim x in_dim, biases 1 x out_dim,
/// and batches one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Builds a rows x cols matrix from row-major data, rejecting size mismatch and non-finite entries.
Matrix make_matrix(Eigen::Index rows, Eigen::Index cols, std::span<const double> data);

/// Throws NumericError naming `what` if any entry is NaN or Inf.
void require_finite(const Matrix& m, std::string_view what);

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape is alive and not cleared.
class Var {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  Var() = default;

  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr && id_ != npos; }
  [[nodiscard]] Tape& tape() const;
  [[nodiscard]] std::size_t id() const noexcept { return id_; }
  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  /// Shorthand for value()(0, 0) on 1x1 nodes.
  [[nodiscard]] double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) noexcept : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = npos;
};

/// Append-only record of matrix-valued primitive operations for reverse-mode differentiation.
///
/// Every node stores its value and, if any operand needs a gradient, a closure that pushes the
/// upstream gradient into its operands. Operands always precede their users, so a single sweep
/// from the loss node down to node 0 visits each node once.
///
/// Single owner: a tape must not be shared between threads.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& upstream)>;

  /// In checked mode every recorded value is scanned for NaN/Inf on insertion.
  explicit Tape(bool checked = false) : checked_(checked) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Matrix value);
  /// Leaf that accumulates a gradient during backward().
  Var variable(Matrix value);
  /// Records an operation result. The closure is kept only if some operand requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> operands, Backward backward);
  Var record(Matrix value, std::span<const Var> operands, Backward backward);

  [[nodiscard]] const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] bool checked() const noexcept { return checked_; }

  /// Adds `g` into the gradient of node `id`; no-op for nodes that do not require gradients.
  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    Node& node = nodes_[id];
    if (!node.requires_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }

  /// Reverse sweep from a 1x1 node. Clears gradients from any previous sweep first.
  void backward(Var loss);

  /// Gradient of the last backward() loss w.r.t. `v`; zeros if `v` was not reached.
  [[nodiscard]] Matrix gradient(Var v) const;

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
  };

  Var push(Matrix value, bool requires_grad, Backward backward);

  // deque keeps references returned by value() stable while the tape grows
  std::deque<Node> nodes_;
  bool checked_ = false;
};

/// dLoss/dparam for each entry of `params`, same shapes as the parameter values.
std::vector<Matrix> reverse_gradient(Tape& tape, Var loss, std::span<const Var> params);

// ---------------------------------------------------------------------------------------------
// Primitives. All operands must live on the same tape.
// ---------------------------------------------------------------------------------------------

Var matmul(Var a, Var b);
/// a * w^T, the layer product for out x in weights.
Var matmul_nt(Var a, Var w);
/// Adds a 1 x cols row to every row of `a`.
Var add_row(Var a, Var row);
/// a * w^T + bias in one node.
Var affine(Var a, Var w, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var square(Var a);
Var tanh(Var a);
/// Elementwise tanh without a tape.
Matrix tanh_values(const Matrix& z);
Var sigmoid(Var a);
Var relu(Var a);
/// Heaviside step (1 where a > 0). Piecewise constant, so it carries no gradient.
Var step(Var a);
Var log(Var a);
/// Clamp to [lo, hi]; gradient passes only where lo < a < hi.
Var clamp(Var a, double lo, double hi);
/// 1x1 sum of all entries.
Var sum(Var a);
/// 1x1 mean of all entries.
Var mean(Var a);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
/// Row i of the result is row indices[i] of `a`; backward scatter-adds.
Var gather_rows(Var a, std::span<const Eigen::Index> indices);
/// Row-major reinterpretation.
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace burgan::ad
