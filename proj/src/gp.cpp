#include "lasdi/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "lasdi/errors.hpp"

namespace lasdi::gp {

namespace {

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const KernelParams& p) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = p.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = kernel(x.row(i).transpose(), x.row(j).transpose(), p);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

// Factorizes K + jitter * jitter_scale * I, escalating the jitter by 10x on failure.
std::optional<Eigen::LLT<Eigen::MatrixXd>> factorize(const Eigen::MatrixXd& k, KernelParams& p,
                                                     double jitter_min, double jitter_max) {
  for (double jitter = jitter_min; jitter <= jitter_max * (1 + 1e-12); jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter * p.jitter_scale;
    Eigen::LLT<Eigen::MatrixXd> llt(kj);
    if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) {
      p.jitter = jitter;
      return llt;
    }
  }
  return std::nullopt;
}

struct Standardization {
  Eigen::RowVectorXd mean, scale;
};

Standardization standardization(const Eigen::MatrixXd& x) {
  Standardization s;
  s.mean = x.colwise().mean();
  s.scale.resize(x.cols());
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    const double var = (x.col(d).array() - s.mean(d)).square().mean();
    s.scale(d) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

// v = (log sigma^2, log l_0, log l_1, ...)
KernelParams from_log(const Eigen::VectorXd& v) {
  KernelParams p;
  p.signal_variance = std::exp(v(0));
  p.lengthscales = v.tail(v.size() - 1).array().exp();
  return p;
}

struct Bounds {
  Eigen::VectorXd lo, hi;
  Eigen::VectorXd clamp(const Eigen::VectorXd& v) const { return v.cwiseMax(lo).cwiseMin(hi); }
};

// Projected gradient ascent with backtracking.
std::pair<Eigen::VectorXd, double> maximize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                            Eigen::VectorXd v, const Bounds& bounds,
                                            int max_iterations, double jitter, double jitter_scale) {
  auto eval = [&](const Eigen::VectorXd& lv) {
    KernelParams p = from_log(lv);
    p.jitter = jitter;
    p.jitter_scale = jitter_scale;
    return log_marginal_likelihood(x, y, p);
  };
  v = bounds.clamp(v);
  auto cur = eval(v);
  if (!cur) return {v, -std::numeric_limits<double>::infinity()};
  double step = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd g = cur->gradient;
    if (!g.allFinite() || g.norm() < 1e-9) break;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Eigen::VectorXd trial = bounds.clamp(v + step * g / std::max(1.0, g.norm()));
      if ((trial - v).norm() < 1e-12) break;
      auto next = eval(trial);
      if (next && next->value > cur->value) {
        const double gain = next->value - cur->value;
        v = trial;
        cur = next;
        improved = gain > 1e-10;
        step = std::min(step * 2.0, 4.0);
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return {v, cur->value};
}

}  // namespace

double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelParams& p) {
  const double r2 = ((a - b).array() / p.lengthscales.array()).square().sum();
  return p.signal_variance * std::exp(-0.5 * r2);
}

std::optional<Likelihood> log_marginal_likelihood(const Eigen::MatrixXd& x,
                                                  const Eigen::VectorXd& y,
                                                  const KernelParams& params) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd kf = kernel_matrix(x, params);
  Eigen::MatrixXd k = kf;
  k.diagonal().array() += params.noise_variance();
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::MatrixXd l = llt.matrixL();
  if (!(l.diagonal().array() > 0.0).all()) return std::nullopt;

  Likelihood out;
  out.value = -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  const Eigen::MatrixXd w =
      alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
  out.gradient.resize(1 + x.cols());
  out.gradient(0) = 0.5 * (w.cwiseProduct(kf)).sum();
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    Eigen::MatrixXd dk(n, n);
    const double l2 = params.lengthscales(d) * params.lengthscales(d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double diff = x(i, d) - x(j, d);
        dk(i, j) = kf(i, j) * diff * diff / l2;
      }
    out.gradient(1 + d) = 0.5 * (w.cwiseProduct(dk)).sum();
  }
  if (!std::isfinite(out.value)) return std::nullopt;
  return out;
}

Eigen::VectorXd GPSurrogate::standardize(const fom::ParameterPoint& theta) const {
  Eigen::RowVectorXd raw(2);
  raw << theta.nu, theta.omega;
  return ((raw - input_mean).array() / input_scale.array()).matrix().transpose();
}

void GPSurrogate::refactor() {
  const Eigen::MatrixXd x =
      ((train_inputs.rowwise() - input_mean).array().rowwise() / input_scale.array()).matrix();
  cholesky.assign(num_outputs(), {});
  alpha.assign(num_outputs(), {});
  for (Eigen::Index o = 0; o < num_outputs(); ++o) {
    Eigen::MatrixXd k = kernel_matrix(x, params[o]);
    k.diagonal().array() += params[o].noise_variance();
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) throw NumericalError("GP: kernel matrix is not SPD");
    cholesky[o] = llt.matrixL();
    const Eigen::VectorXd y = train_targets.col(o).array() - target_mean(o);
    // The jitter is only there for the factorization; a few refinement steps
    // against the noise-free matrix remove most of its bias from alpha.
    k.diagonal().array() -= params[o].noise_variance();
    Eigen::VectorXd a = llt.solve(y);
    Eigen::VectorXd best = a;
    double best_res = (y - k * a).cwiseAbs().maxCoeff();
    for (int it = 0; it < 4 && best_res > 0.0; ++it) {
      a += llt.solve(y - k * a);
      const double res = (y - k * a).cwiseAbs().maxCoeff();
      if (!(res < best_res)) break;
      best_res = res;
      best = a;
    }
    alpha[o] = std::move(best);
  }
}

Posterior GPSurrogate::posterior(const fom::ParameterPoint& theta) const {
  const Eigen::VectorXd xs = standardize(theta);
  const Eigen::MatrixXd x =
      ((train_inputs.rowwise() - input_mean).array().rowwise() / input_scale.array()).matrix();
  Posterior out;
  out.mean.resize(num_outputs());
  out.variance.resize(num_outputs());
  Eigen::VectorXd ks(num_points());
  for (Eigen::Index o = 0; o < num_outputs(); ++o) {
    const KernelParams& p = params[o];
    for (Eigen::Index i = 0; i < num_points(); ++i) ks(i) = kernel(x.row(i).transpose(), xs, p);
    out.mean(o) = target_mean(o) + ks.dot(alpha[o]);
    const Eigen::VectorXd v = cholesky[o].triangularView<Eigen::Lower>().solve(ks);
    out.variance(o) = std::max(0.0, p.signal_variance - v.squaredNorm());
  }
  return out;
}

rom::LatentCoefficients GPSurrogate::mean_coefficients(const fom::ParameterPoint& theta) const {
  return rom::LatentCoefficients::unflatten(posterior(theta).mean, latent_dim);
}

Posterior posterior(const GPSurrogate& s, const fom::ParameterPoint& theta) {
  return s.posterior(theta);
}

Eigen::MatrixXd theta_matrix(const std::vector<fom::ParameterPoint>& thetas) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(thetas.size()), 2);
  for (std::size_t i = 0; i < thetas.size(); ++i) x.row(static_cast<Eigen::Index>(i)) << thetas[i].nu, thetas[i].omega;
  return x;
}

Eigen::MatrixXd coefficient_matrix(const std::vector<rom::LatentCoefficients>& coeffs) {
  if (coeffs.empty()) return {};
  const int l = coeffs.front().dim();
  Eigen::MatrixXd y(static_cast<Eigen::Index>(coeffs.size()), l * l + l);
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    y.row(static_cast<Eigen::Index>(i)) = coeffs[i].flatten().transpose();
  return y;
}

GPSurrogate fit_gp(const Eigen::MatrixXd& thetas, const Eigen::MatrixXd& coeff_sets, int latent_dim,
                   const FitOptions& options) {
  const Eigen::Index n = thetas.rows();
  if (n < 1) throw DomainError("fit_gp: need at least one training point");
  if (coeff_sets.rows() != n) throw DimensionError("fit_gp: one coefficient set per theta required");
  if (coeff_sets.cols() != latent_dim * latent_dim + latent_dim)
    throw DimensionError("fit_gp: coefficient width must be L^2 + L");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (thetas.row(i) == thetas.row(j))
        throw DomainError("fit_gp: duplicate training parameter at rows " + std::to_string(j) +
                          " and " + std::to_string(i));

  GPSurrogate s;
  s.latent_dim = latent_dim;
  s.train_inputs = thetas;
  s.train_targets = coeff_sets;
  const Standardization st = standardization(thetas);
  s.input_mean = st.mean;
  s.input_scale = st.scale;
  s.target_mean = coeff_sets.colwise().mean();
  const Eigen::MatrixXd x =
      ((thetas.rowwise() - st.mean).array().rowwise() / st.scale.array()).matrix();

  const Eigen::Index dims = thetas.cols();
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (Eigen::Index o = 0; o < coeff_sets.cols(); ++o) {
    const Eigen::VectorXd y = coeff_sets.col(o).array() - s.target_mean(o);
    const double var_y = std::max(y.squaredNorm() / static_cast<double>(n), 1e-16);

    Bounds bounds;
    bounds.lo.resize(1 + dims);
    bounds.hi.resize(1 + dims);
    bounds.lo(0) = std::log(var_y) - 10.0;
    bounds.hi(0) = std::log(var_y) + 10.0;
    bounds.lo.tail(dims).setConstant(std::log(options.lengthscale_min));
    bounds.hi.tail(dims).setConstant(std::log(options.lengthscale_max));

    Eigen::VectorXd best;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
      Eigen::VectorXd v0(1 + dims);
      v0(0) = std::log(var_y);
      v0.tail(dims).setZero();
      if (r > 0) {
        v0(0) += 2.0 * unit(rng) - 1.0;
        for (Eigen::Index d = 0; d < dims; ++d) v0(1 + d) = std::log(0.2) + unit(rng) * std::log(25.0);
      }
      if (n == 1) {
        best = v0;
        break;  // the likelihood is flat in the lengthscales
      }
      auto [v, value] = maximize(x, y, v0, bounds, options.max_iterations, options.jitter_min, var_y);
      if (value > best_value) {
        best_value = value;
        best = v;
      }
    }
    KernelParams p = from_log(best);
    p.jitter_scale = var_y;
    auto llt = factorize(kernel_matrix(x, p), p, options.jitter_min, options.jitter_max);
    if (!llt)
      throw NumericalError("fit_gp: kernel matrix for output " + std::to_string(o) +
                           " is not SPD even with maximal jitter");
    s.params.push_back(p);
  }
  s.refactor();
  return s;
}

GPSurrogate fit_gp(const std::vector<fom::ParameterPoint>& thetas,
                   const std::vector<rom::LatentCoefficients>& coeffs, const FitOptions& options) {
  if (coeffs.empty()) throw DomainError("fit_gp: need at least one training point");
  return fit_gp(theta_matrix(thetas), coefficient_matrix(coeffs), coeffs.front().dim(), options);
}

std::vector<rom::LatentCoefficients> sample_posterior(const GPSurrogate& s,
                                                      const fom::ParameterPoint& theta,
                                                      int n_samples, std::mt19937_64& rng) {
  if (n_samples < 1) throw DomainError("sample_posterior: n_samples must be positive");
  const Posterior post = s.posterior(theta);
  const Eigen::VectorXd sd = post.variance.cwiseSqrt();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<rom::LatentCoefficients> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int k = 0; k < n_samples; ++k) {
    Eigen::VectorXd flat(post.mean.size());
    for (Eigen::Index o = 0; o < flat.size(); ++o) flat(o) = post.mean(o) + sd(o) * normal(rng);
    out.push_back(rom::LatentCoefficients::unflatten(flat, s.latent_dim));
  }
  return out;
}

double decoded_variance(const GPSurrogate& s, const rom::AutoencoderModel& model,
                        const Candidate& candidate, const GreedySettings& settings,
                        std::mt19937_64& rng) {
  const Eigen::VectorXd& times = settings.times;
  if (times.size() < 2) throw DomainError("greedy: integration grid needs at least 2 times");
  const double substep = settings.substep > 0.0
                             ? settings.substep
                             : (times(times.size() - 1) - times(0)) / (times.size() - 1);
  const auto samples = sample_posterior(s, candidate.theta, settings.n_samples, rng);
  const Eigen::VectorXd z0 =
      rom::encode(model, candidate.initial_state.transpose()).row(0).transpose();

  // Welford accumulation over samples, per space-time entry.
  ad::Matrix mean, m2;
  int count = 0;
  for (const auto& c : samples) {
    ad::Matrix pred;
    try {
      pred = rom::decode(model, rom::integrate_latent(z0, c, times, substep));
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
    if (!pred.allFinite()) return std::numeric_limits<double>::infinity();
    ++count;
    if (count == 1) {
      mean = pred;
      m2 = ad::Matrix::Zero(pred.rows(), pred.cols());
      continue;
    }
    const ad::Matrix delta = pred - mean;
    mean += delta / count;
    m2 += delta.cwiseProduct(pred - mean);
  }
  if (count < 2) return 0.0;
  return (m2 / (count - 1)).mean();
}

Ranking greedy_rank(const GPSurrogate& s, const rom::AutoencoderModel& model,
                    const std::vector<Candidate>& candidates, const GreedySettings& settings,
                    std::mt19937_64& rng) {
  Ranking r;
  r.scores.reserve(candidates.size());
  for (const auto& c : candidates) r.scores.push_back(decoded_variance(s, model, c, settings, rng));
  r.order.resize(candidates.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return r.scores[a] > r.scores[b]; });
  return r;
}

std::optional<fom::ParameterPoint> greedy_select(const GPSurrogate& s,
                                                 const rom::AutoencoderModel& model,
                                                 const std::vector<Candidate>& candidates,
                                                 const GreedySettings& settings,
                                                 std::mt19937_64& rng) {
  if (candidates.empty()) return std::nullopt;
  const Ranking r = greedy_rank(s, model, candidates, settings, rng);
  return candidates[r.order.front()].theta;
}

}  // namespace lasdi::gp
