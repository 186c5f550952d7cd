#pragma once

// Minimal reverse-mode differentiation over dense row-major matrices.
//
// A Tape records every primitive in evaluation order; Tensor is a cheap
// handle (tape pointer + node id). Leaf gradients accumulate across
// backward() calls until zero_grad() is called.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "lasdi/errors.hpp"

namespace lasdi::ad {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tape;

class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  /// Accumulated gradient of a leaf; zeros of the value's shape if none yet.
  const Matrix& grad() const;

  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Index size() const { return value().size(); }
  std::vector<Index> shape() const { return {rows(), cols()}; }
  bool is_scalar() const { return size() == 1; }
  double item() const;

  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the adjoint of the node's output; pushes adjoints to inputs
  /// via accumulate().
  using Backward = std::function<void(Tape&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor variable(Matrix value);
  Tensor constant(Matrix value);
  Tensor scalar(double v, bool requires_grad = false);

  /// Appends a node computed from `inputs`. The backward rule is dropped when
  /// no input carries a gradient.
  Tensor record(Matrix value, std::initializer_list<Tensor> inputs, Backward backward);

  /// Propagates d(loss)/d(node) through the tape and adds it to every leaf
  /// gradient. Calling twice accumulates exactly twice.
  void backward(const Tensor& loss);
  void zero_grad();

  /// Adds `g` into the adjoint of node `t` (no-op when `t` needs no gradient).
  template <typename Derived>
  void accumulate(const Tensor& t, const Eigen::MatrixBase<Derived>& g) {
    auto& node = nodes_[t.id_];
    if (!node.needs_grad) return;
    auto& adj = adjoint_[t.id_];
    if (adj.size() == 0) {
      adj = g;
    } else {
      adj += g;
    }
  }

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  bool is_leaf(std::size_t id) const { return nodes_[id].is_leaf; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    mutable Matrix grad;  // leaves only
    bool is_leaf = false;
    bool needs_grad = false;
    Backward backward;
  };

  Tensor push(Node node);

  std::vector<Node> nodes_;
  std::vector<Matrix> adjoint_;
};

// ---- primitives ------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Elementwise binary ops: identical shapes, or one side 1x1 (scalar broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);
Tensor sin(const Tensor& a);
/// |x| with subgradient 0 at x == 0.
Tensor abs(const Tensor& a);

/// a (m x n) + row (1 x n) added to every row.
Tensor add_rowwise(const Tensor& a, const Tensor& row);
/// Row i of `a` multiplied by the constant factors[i].
Tensor scale_rows(const Tensor& a, const Eigen::VectorXd& factors);
/// Rows of `a` at `indices`, in order (repeats allowed).
Tensor gather_rows(const Tensor& a, const std::vector<Index>& indices);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor l1_norm(const Tensor& a);
Tensor sq_l2_norm(const Tensor& a);
/// Squared Frobenius norm; same value as sq_l2_norm over a matrix.
Tensor frobenius_sq(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

}  // namespace lasdi::ad
