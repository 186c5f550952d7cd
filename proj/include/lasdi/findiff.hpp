#pragma once

// Three-point first-derivative stencils on nonuniform grids.
//
// Interior samples use the central stencil over the neighbouring gaps (a, b);
// the first sample uses the right-looking stencil and the last sample the
// left-looking one, all second-order accurate.

#include <Eigen/Dense>

#include <array>
#include <string>

#include "lasdi/errors.hpp"
#include "lasdi/gradtape.hpp"

namespace lasdi::findiff {

template <typename Scalar>
struct StencilWeights {
  std::array<Scalar, 3> offsets;
  std::array<Scalar, 3> weights;

  /// Sum of w_i * offset_i^power.
  Scalar moment(int power) const {
    Scalar m(0);
    for (int i = 0; i < 3; ++i) {
      Scalar p(1);
      for (int k = 0; k < power; ++k) p *= offsets[i];
      m += weights[i] * p;
    }
    return m;
  }
};

enum class Side { left, right };

namespace detail {
template <typename Scalar>
void require_positive_gaps(Scalar a, Scalar b, const char* op) {
  if (!(a > Scalar(0)) || !(b > Scalar(0)))
    throw DomainError(std::string(op) + ": step sizes must be positive");
}
}  // namespace detail

/// Samples at (t - a, t, t + b).
template <typename Scalar>
StencilWeights<Scalar> central_weights(Scalar a, Scalar b) {
  detail::require_positive_gaps(a, b, "central_weights");
  return {{-a, Scalar(0), b},
          {-b / (a * (a + b)), (b - a) / (a * b), a / (b * (a + b))}};
}

/// Right: samples at (t, t + a, t + a + b). Left: samples at
/// (t - a - b, t - a, t), ordered by ascending offset.
template <typename Scalar>
StencilWeights<Scalar> onesided_weights(Side side, Scalar a, Scalar b) {
  detail::require_positive_gaps(a, b, "onesided_weights");
  const Scalar w0 = -(Scalar(2) * a + b) / (a * (a + b));
  const Scalar w1 = (a + b) / (a * b);
  const Scalar w2 = -a / (b * (a + b));
  if (side == Side::right) return {{Scalar(0), a, a + b}, {w0, w1, w2}};
  return {{-(a + b), -a, Scalar(0)}, {-w2, -w1, -w0}};
}

/// Solves the 3x3 moment system sum w_i x_i^k = [k == 1], k = 0..2.
template <typename Scalar>
StencilWeights<Scalar> stencil_weights_general(const std::array<Scalar, 3>& offsets) {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (offsets[i] == offsets[j])
        throw NumericalError("stencil_weights_general: duplicate offsets make the system singular");
  Mat3 v;
  for (int i = 0; i < 3; ++i) {
    v(0, i) = Scalar(1);
    v(1, i) = offsets[i];
    v(2, i) = offsets[i] * offsets[i];
  }
  const Vec3 rhs(Scalar(0), Scalar(1), Scalar(0));
  Eigen::FullPivLU<Mat3> lu(v);
  if (!lu.isInvertible()) throw NumericalError("stencil_weights_general: singular moment system");
  const Vec3 w = lu.solve(rhs);
  return {offsets, {w(0), w(1), w(2)}};
}

/// Per-row stencil for a whole time grid: derivative row i is
/// sum_k weights(i, k) * values.row(first(i) + k).
struct SeriesStencil {
  Eigen::VectorXi first;
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> weights;

  static SeriesStencil build(const Eigen::Ref<const Eigen::VectorXd>& times);

  Eigen::Index size() const { return first.size(); }

  template <typename Derived>
  ad::Matrix apply(const Eigen::MatrixBase<Derived>& values) const {
    if (values.rows() != size())
      throw DimensionError("differentiate_series: " + std::to_string(values.rows()) +
                           " rows for " + std::to_string(size()) + " time stamps");
    ad::Matrix out(values.rows(), values.cols());
    for (Eigen::Index i = 0; i < size(); ++i) {
      const int f = first(i);
      out.row(i) = weights(i, 0) * values.row(f) + weights(i, 1) * values.row(f + 1) +
                   weights(i, 2) * values.row(f + 2);
    }
    return out;
  }

  /// Adjoint of apply().
  ad::Matrix apply_transpose(const ad::Matrix& g) const;
};

/// O(N * D) derivative estimate of each column of `values` (N x D) sampled
/// at strictly increasing `times`. Requires N >= 3.
template <typename Derived>
ad::Matrix differentiate_series(const Eigen::Ref<const Eigen::VectorXd>& times,
                                const Eigen::MatrixBase<Derived>& values) {
  return SeriesStencil::build(times).apply(values);
}

/// Taped variant; gradients flow to `values`, never to `times`.
ad::Tensor differentiate_series(const SeriesStencil& stencil, const ad::Tensor& values);
ad::Tensor differentiate_series(const Eigen::Ref<const Eigen::VectorXd>& times,
                                const ad::Tensor& values);

}  // namespace lasdi::findiff
