#pragma once

// Componentwise natural cubic spline through a time series.

#include <Eigen/Dense>

#include <algorithm>
#include <string>

#include "lasdi/errors.hpp"

namespace lasdi::interp {

template <typename Scalar>
class CubicSpline {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  CubicSpline() = default;

  /// Segment i on [t_i, t_{i+1}] evaluates c0 + c1 s + c2 s^2 + c3 s^3 with
  /// s = t - t_i. Two knots give a line, three knots the interpolating
  /// quadratic, otherwise the natural cubic spline.
  template <typename Derived>
  static CubicSpline fit(const Vector& times, const Eigen::MatrixBase<Derived>& values) {
    const Eigen::Index n = times.size();
    if (n < 2) throw DomainError("fit_spline: need at least 2 knots");
    if (values.rows() != n)
      throw DimensionError("fit_spline: " + std::to_string(values.rows()) + " rows for " +
                           std::to_string(n) + " knots");
    for (Eigen::Index i = 1; i < n; ++i)
      if (!(times(i) > times(i - 1)))
        throw DomainError("fit_spline: knots must be strictly increasing");

    CubicSpline s;
    s.knots_ = times;
    const Eigen::Index d = values.cols();
    const Eigen::Index segs = n - 1;
    for (auto* c : {&s.c0_, &s.c1_, &s.c2_, &s.c3_}) c->setZero(segs, d);
    s.c0_ = values.topRows(segs);
    s.last_ = values.row(n - 1);

    Matrix y = values;
    if (n == 2) {
      s.c1_.row(0) = (y.row(1) - y.row(0)) / (times(1) - times(0));
      return s;
    }
    if (n == 3) {
      // Newton form of the quadratic through all three knots.
      const Scalar h0 = times(1) - times(0), h1 = times(2) - times(1);
      const RowVector d01 = (y.row(1) - y.row(0)) / h0;
      const RowVector d12 = (y.row(2) - y.row(1)) / h1;
      const RowVector curv = (d12 - d01) / (h0 + h1);
      s.c1_.row(0) = d01 - curv * h0;
      s.c2_.row(0) = curv;
      s.c1_.row(1) = d01 + curv * h0;
      s.c2_.row(1) = curv;
      return s;
    }

    // Tridiagonal system for interior second derivatives M_1..M_{n-2}.
    Vector h(segs);
    for (Eigen::Index i = 0; i < segs; ++i) h(i) = times(i + 1) - times(i);
    const Eigen::Index m = n - 2;
    Vector diag(m), upper(m), lower(m);
    Matrix rhs(m, d);
    for (Eigen::Index k = 0; k < m; ++k) {
      const Eigen::Index i = k + 1;
      lower(k) = h(i - 1);
      diag(k) = Scalar(2) * (h(i - 1) + h(i));
      upper(k) = h(i);
      rhs.row(k) = Scalar(6) * ((y.row(i + 1) - y.row(i)) / h(i) - (y.row(i) - y.row(i - 1)) / h(i - 1));
    }
    // Thomas algorithm; diagonally dominant so no pivoting needed.
    for (Eigen::Index k = 1; k < m; ++k) {
      const Scalar w = lower(k) / diag(k - 1);
      diag(k) -= w * upper(k - 1);
      rhs.row(k) -= w * rhs.row(k - 1);
    }
    Matrix second = Matrix::Zero(n, d);
    second.row(m) = rhs.row(m - 1) / diag(m - 1);
    for (Eigen::Index k = m - 1; k-- > 0;)
      second.row(k + 1) = (rhs.row(k) - upper(k) * second.row(k + 2)) / diag(k);

    for (Eigen::Index i = 0; i < segs; ++i) {
      s.c1_.row(i) = (y.row(i + 1) - y.row(i)) / h(i) -
                     h(i) * (Scalar(2) * second.row(i) + second.row(i + 1)) / Scalar(6);
      s.c2_.row(i) = second.row(i) / Scalar(2);
      s.c3_.row(i) = (second.row(i + 1) - second.row(i)) / (Scalar(6) * h(i));
    }
    return s;
  }

  Eigen::Index num_knots() const { return knots_.size(); }
  Eigen::Index dim() const { return c0_.cols(); }
  const Vector& knots() const { return knots_; }

  /// Value (order 0) or derivative (order 1..3) at t; throws outside the knot range.
  RowVector eval(Scalar t, int order = 0) const {
    const Eigen::Index seg = locate(t);
    if (order == 0 && seg == knots_.size() - 2 && t == knots_(knots_.size() - 1) && last_.size())
      return last_;
    const Scalar s = t - knots_(seg);
    switch (order) {
      case 0: return c0_.row(seg) + s * (c1_.row(seg) + s * (c2_.row(seg) + s * c3_.row(seg)));
      case 1: return c1_.row(seg) + s * (Scalar(2) * c2_.row(seg) + Scalar(3) * s * c3_.row(seg));
      case 2: return Scalar(2) * c2_.row(seg) + Scalar(6) * s * c3_.row(seg);
      case 3: return Scalar(6) * c3_.row(seg);
      default: throw DomainError("eval_spline: derivative order must be 0..3");
    }
  }

  /// Evaluates the polynomial of a given segment (no range check on t).
  RowVector eval_segment(Eigen::Index seg, Scalar t, int order) const {
    const Scalar s = t - knots_(seg);
    if (order == 1)
      return c1_.row(seg) + s * (Scalar(2) * c2_.row(seg) + Scalar(3) * s * c3_.row(seg));
    if (order == 2) return Scalar(2) * c2_.row(seg) + Scalar(6) * s * c3_.row(seg);
    return c0_.row(seg) + s * (c1_.row(seg) + s * (c2_.row(seg) + s * c3_.row(seg)));
  }

 private:
  Eigen::Index locate(Scalar t) const {
    const Eigen::Index n = knots_.size();
    if (n < 2) throw UsageError("eval_spline: spline is not fitted");
    if (!(t >= knots_(0)) || !(t <= knots_(n - 1)))
      throw DomainError("eval_spline: t = " + std::to_string(static_cast<double>(t)) +
                        " outside knot range; extrapolation is not supported");
    const Scalar* begin = knots_.data();
    const Scalar* it = std::upper_bound(begin, begin + n, t);
    Eigen::Index seg = static_cast<Eigen::Index>(it - begin) - 1;
    return std::clamp<Eigen::Index>(seg, 0, n - 2);
  }

  Vector knots_;
  Matrix c0_, c1_, c2_, c3_;
  RowVector last_;  // the final knot starts no segment; kept for exact hits
};

template <typename Scalar, typename Derived>
CubicSpline<Scalar> fit_spline(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& times,
                               const Eigen::MatrixBase<Derived>& values) {
  return CubicSpline<Scalar>::fit(times, values);
}

template <typename Scalar>
typename CubicSpline<Scalar>::RowVector eval_spline(const CubicSpline<Scalar>& s, Scalar t) {
  return s.eval(t);
}

}  // namespace lasdi::interp
