#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "lasdi/gradtape.hpp"

namespace lasdi::testing {

using ad::Matrix;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

/// Central differences of `f` with respect to every entry of every matrix in
/// `params`; entries are perturbed in place and restored.
inline std::vector<Matrix> central_differences(const std::function<double()>& f,
                                               const std::vector<Matrix*>& params,
                                               double step = 1e-5) {
  std::vector<Matrix> out;
  for (Matrix* p : params) {
    Matrix g(p->rows(), p->cols());
    for (Eigen::Index i = 0; i < p->size(); ++i) {
      double& x = p->data()[i];
      const double saved = x;
      x = saved + step;
      const double up = f();
      x = saved - step;
      const double down = f();
      x = saved;
      g.data()[i] = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// ||analytic - numeric|| / max(||numeric||, floor) over all blocks together.
inline double relative_gradient_error(const std::vector<Matrix>& analytic,
                                      const std::vector<Matrix>& numeric, double floor = 1e-8) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    diff += (analytic[k] - numeric[k]).squaredNorm();
    ref += numeric[k].squaredNorm();
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), floor);
}

/// Least-squares slope of log(err) against log(h).
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
  const auto n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// exp(M) by scaling and squaring with a truncated Taylor series.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& m) {
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd a = m / std::ldexp(1.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// Random matrix with eigenvalues of negative real part: -(c I + S S^T) + K,
/// K skew-symmetric.
inline Eigen::MatrixXd random_stable_matrix(int n, std::mt19937_64& rng) {
  const Matrix s = random_matrix(n, n, rng);
  const Matrix k = random_matrix(n, n, rng);
  return -(0.5 * Eigen::MatrixXd::Identity(n, n) + s * s.transpose()) + (k - k.transpose()) * 0.5;
}

}  // namespace lasdi::testing
