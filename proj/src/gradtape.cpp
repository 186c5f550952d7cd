#include "lasdi/gradtape.hpp"

#include <string>

namespace lasdi::ad {

namespace {

std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

void require_same_tape(const Tensor& a, const Tensor& b) {
  if (!a.valid() || !b.valid()) throw UsageError("tensor is not attached to a tape");
  if (a.tape() != b.tape()) throw UsageError("operands live on different tapes");
}

enum class Broadcast { none, lhs_scalar, rhs_scalar };

Broadcast check_elementwise(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::none;
  if (b.size() == 1) return Broadcast::rhs_scalar;
  if (a.size() == 1) return Broadcast::lhs_scalar;
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                       shape_str(b));
}

Matrix filled(const Matrix& like, double v) { return Matrix::Constant(like.rows(), like.cols(), v); }

void require_nonempty(const Tensor& a, const char* op) {
  if (a.size() == 0) throw DomainError(std::string(op) + ": empty tensor");
}

}  // namespace

// ---- Tensor ----------------------------------------------------------------

const Matrix& Tensor::value() const {
  if (!tape_) throw UsageError("tensor is not attached to a tape");
  return tape_->value(id_);
}

const Matrix& Tensor::grad() const {
  if (!tape_) throw UsageError("tensor is not attached to a tape");
  return tape_->grad(id_);
}

double Tensor::item() const {
  if (!is_scalar()) throw UsageError("item() on non-scalar tensor " + shape_str(value()));
  return value()(0, 0);
}

bool Tensor::requires_grad() const { return tape_ && tape_->needs_grad(id_); }

// ---- Tape ------------------------------------------------------------------

Tensor Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  adjoint_.emplace_back();
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.is_leaf = true;
  n.needs_grad = true;
  return push(std::move(n));
}

Tensor Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.is_leaf = true;
  return push(std::move(n));
}

Tensor Tape::scalar(double v, bool requires_grad) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return requires_grad ? variable(std::move(m)) : constant(std::move(m));
}

Tensor Tape::record(Matrix value, std::initializer_list<Tensor> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const auto& in : inputs) {
    if (in.tape() != this) throw UsageError("input tensor belongs to another tape");
    n.needs_grad = n.needs_grad || nodes_[in.id()].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Matrix& Tape::grad(std::size_t id) const {
  const auto& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this) throw UsageError("loss belongs to another tape");
  if (!loss.is_scalar())
    throw UsageError("backward requires a scalar loss, got " + shape_str(loss.value()));

  for (auto& a : adjoint_) a.resize(0, 0);
  if (!nodes_[loss.id()].needs_grad) return;
  adjoint_[loss.id()] = Matrix::Ones(1, 1);

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    if (adjoint_[i].size() == 0) continue;
    auto& node = nodes_[i];
    if (node.is_leaf) {
      if (node.grad.size() == 0) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
      node.grad += adjoint_[i];
    } else if (node.backward) {
      // Move out so the rule may push to earlier nodes without aliasing.
      Matrix g = std::move(adjoint_[i]);
      node.backward(*this, g);
    }
    adjoint_[i].resize(0, 0);
  }
}

void Tape::zero_grad() {
  for (auto& n : nodes_)
    if (n.is_leaf && n.grad.size() != 0) n.grad.setZero();
}

// ---- primitives ------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows())
    throw DimensionError("matmul: inner dimensions differ " + shape_str(av) + " * " + shape_str(bv));
  Matrix out = av * bv;
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a.id())) t.accumulate(a, g * t.value(b.id()).transpose());
    if (t.needs_grad(b.id())) t.accumulate(b, t.value(a.id()).transpose() * g);
  });
}

Tensor transpose(const Tensor& a) {
  Matrix out = a.value().transpose();
  return a.tape()->record(std::move(out), {a},
                          [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

namespace {

// Reduces a broadcast adjoint back to the scalar operand.
template <typename Derived>
void accumulate_broadcast(Tape& t, const Tensor& x, bool is_scalar_operand,
                          const Eigen::MatrixBase<Derived>& g) {
  if (is_scalar_operand) {
    t.accumulate(x, Matrix::Constant(1, 1, g.sum()));
  } else {
    t.accumulate(x, g);
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Broadcast bc = check_elementwise(av, bv, "add");
  Matrix out;
  switch (bc) {
    case Broadcast::none: out = av + bv; break;
    case Broadcast::rhs_scalar: out = av.array() + bv(0, 0); break;
    case Broadcast::lhs_scalar: out = bv.array() + av(0, 0); break;
  }
  return a.tape()->record(std::move(out), {a, b}, [a, b, bc](Tape& t, const Matrix& g) {
    accumulate_broadcast(t, a, bc == Broadcast::lhs_scalar, g);
    accumulate_broadcast(t, b, bc == Broadcast::rhs_scalar, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Broadcast bc = check_elementwise(av, bv, "sub");
  Matrix out;
  switch (bc) {
    case Broadcast::none: out = av - bv; break;
    case Broadcast::rhs_scalar: out = av.array() - bv(0, 0); break;
    case Broadcast::lhs_scalar: out = av(0, 0) - bv.array(); break;
  }
  return a.tape()->record(std::move(out), {a, b}, [a, b, bc](Tape& t, const Matrix& g) {
    accumulate_broadcast(t, a, bc == Broadcast::lhs_scalar, g);
    if (t.needs_grad(b.id())) accumulate_broadcast(t, b, bc == Broadcast::rhs_scalar, -g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Broadcast bc = check_elementwise(av, bv, "mul");
  Matrix out;
  switch (bc) {
    case Broadcast::none: out = av.cwiseProduct(bv); break;
    case Broadcast::rhs_scalar: out = av * bv(0, 0); break;
    case Broadcast::lhs_scalar: out = bv * av(0, 0); break;
  }
  return a.tape()->record(std::move(out), {a, b}, [a, b, bc](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a.id());
    const Matrix& bv = t.value(b.id());
    if (t.needs_grad(a.id())) {
      if (bc == Broadcast::none) {
        t.accumulate(a, g.cwiseProduct(bv));
      } else if (bc == Broadcast::rhs_scalar) {
        t.accumulate(a, g * bv(0, 0));
      } else {
        t.accumulate(a, Matrix::Constant(1, 1, g.cwiseProduct(bv).sum()));
      }
    }
    if (t.needs_grad(b.id())) {
      if (bc == Broadcast::none) {
        t.accumulate(b, g.cwiseProduct(av));
      } else if (bc == Broadcast::lhs_scalar) {
        t.accumulate(b, g * av(0, 0));
      } else {
        t.accumulate(b, Matrix::Constant(1, 1, g.cwiseProduct(av).sum()));
      }
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  Matrix out = a.value() * factor;
  return a.tape()->record(std::move(out), {a},
                          [a, factor](Tape& t, const Matrix& g) { t.accumulate(a, g * factor); });
}

Tensor sin(const Tensor& a) {
  Matrix out = a.value().array().sin().matrix();
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(t.value(a.id()).array().cos().matrix()));
  });
}

Tensor abs(const Tensor& a) {
  Matrix out = a.value().cwiseAbs();
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    // sign(0) == 0 gives the zero subgradient at the kink.
    const auto& x = t.value(a.id()).array();
    Matrix sign = ((x > 0.0).cast<double>() - (x < 0.0).cast<double>()).matrix();
    t.accumulate(a, g.cwiseProduct(sign));
  });
}

Tensor add_rowwise(const Tensor& a, const Tensor& row) {
  require_same_tape(a, row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols())
    throw DimensionError("add_rowwise: row " + shape_str(rv) + " does not match " + shape_str(av));
  Matrix out = av.rowwise() + rv.row(0);
  return a.tape()->record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(row.id())) t.accumulate(row, g.colwise().sum());
  });
}

Tensor scale_rows(const Tensor& a, const Eigen::VectorXd& factors) {
  const Matrix& av = a.value();
  if (factors.size() != av.rows())
    throw DimensionError("scale_rows: " + std::to_string(factors.size()) + " factors for " +
                         shape_str(av));
  Matrix out = factors.asDiagonal() * av;
  return a.tape()->record(std::move(out), {a}, [a, factors](Tape& t, const Matrix& g) {
    t.accumulate(a, factors.asDiagonal() * g);
  });
}

Tensor gather_rows(const Tensor& a, const std::vector<Index>& indices) {
  const Matrix& av = a.value();
  Matrix out(static_cast<Index>(indices.size()), av.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= av.rows())
      throw DimensionError("gather_rows: index " + std::to_string(indices[i]) + " out of range");
    out.row(static_cast<Index>(i)) = av.row(indices[i]);
  }
  return a.tape()->record(std::move(out), {a}, [a, indices](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a.id());
    Matrix scattered = Matrix::Zero(av.rows(), av.cols());
    for (std::size_t i = 0; i < indices.size(); ++i)
      scattered.row(indices[i]) += g.row(static_cast<Index>(i));
    t.accumulate(a, scattered);
  });
}

Tensor sum(const Tensor& a) {
  require_nonempty(a, "sum");
  Matrix out = Matrix::Constant(1, 1, a.value().sum());
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, filled(t.value(a.id()), g(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  require_nonempty(a, "mean");
  const double n = static_cast<double>(a.size());
  Matrix out = Matrix::Constant(1, 1, a.value().sum() / n);
  return a.tape()->record(std::move(out), {a}, [a, n](Tape& t, const Matrix& g) {
    t.accumulate(a, filled(t.value(a.id()), g(0, 0) / n));
  });
}

Tensor l1_norm(const Tensor& a) {
  require_nonempty(a, "l1_norm");
  Matrix out = Matrix::Constant(1, 1, a.value().cwiseAbs().sum());
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    const auto& x = t.value(a.id()).array();
    Matrix sign = ((x > 0.0).cast<double>() - (x < 0.0).cast<double>()).matrix();
    t.accumulate(a, sign * g(0, 0));
  });
}

Tensor sq_l2_norm(const Tensor& a) {
  require_nonempty(a, "sq_l2_norm");
  Matrix out = Matrix::Constant(1, 1, a.value().squaredNorm());
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, t.value(a.id()) * (2.0 * g(0, 0)));
  });
}

Tensor frobenius_sq(const Tensor& a) { return sq_l2_norm(a); }

}  // namespace lasdi::ad
