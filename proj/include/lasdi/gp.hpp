#pragma once

// Independent squared-exponential GPs, one per flattened latent coefficient,
// over the parameter domain; plus greedy acquisition by decoded variance.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "lasdi/fom.hpp"
#include "lasdi/rom.hpp"

namespace lasdi::gp {

struct KernelParams {
  double signal_variance = 1.0;
  Eigen::VectorXd lengthscales;  // standardized input units
  double jitter = 1e-10;         // relative to jitter_scale
  double jitter_scale = 1.0;     // empirical variance of the output's targets
  double noise_variance() const { return jitter * jitter_scale; }
};

struct FitOptions {
  int restarts = 3;
  int max_iterations = 200;
  double jitter_min = 1e-10;
  double jitter_max = 1e-6;
  double lengthscale_min = 0.05;
  double lengthscale_max = 3.0;   // about the span of standardized inputs
  std::uint64_t seed = 0;
};

/// Log marginal likelihood and its gradient with respect to
/// (log signal_variance, log lengthscale_0, ...), for centered targets.
struct Likelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;
};
std::optional<Likelihood> log_marginal_likelihood(const Eigen::MatrixXd& x,
                                                  const Eigen::VectorXd& y,
                                                  const KernelParams& params);

double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelParams& p);

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

class GPSurrogate {
 public:
  int latent_dim = 0;
  Eigen::MatrixXd train_inputs;      // raw theta (n x 2)
  Eigen::MatrixXd train_targets;     // n x (L^2 + L)
  Eigen::RowVectorXd input_mean;     // standardization
  Eigen::RowVectorXd input_scale;
  Eigen::RowVectorXd target_mean;    // outputs are centered
  std::vector<KernelParams> params;  // one per output
  std::vector<Eigen::MatrixXd> cholesky;  // lower factor of K + jitter
  std::vector<Eigen::VectorXd> alpha;     // K^-1 (y - mean)

  Eigen::Index num_outputs() const { return train_targets.cols(); }
  Eigen::Index num_points() const { return train_inputs.rows(); }
  Eigen::VectorXd standardize(const fom::ParameterPoint& theta) const;

  Posterior posterior(const fom::ParameterPoint& theta) const;
  rom::LatentCoefficients mean_coefficients(const fom::ParameterPoint& theta) const;

  /// Rebuilds the Cholesky factors and alpha from inputs, targets and params.
  void refactor();
};

Eigen::MatrixXd theta_matrix(const std::vector<fom::ParameterPoint>& thetas);
Eigen::MatrixXd coefficient_matrix(const std::vector<rom::LatentCoefficients>& coeffs);

/// Hyperparameters maximize the log marginal likelihood by projected
/// gradient ascent on log-parameters with several starts.
GPSurrogate fit_gp(const Eigen::MatrixXd& thetas, const Eigen::MatrixXd& coeff_sets, int latent_dim,
                   const FitOptions& options = {});
GPSurrogate fit_gp(const std::vector<fom::ParameterPoint>& thetas,
                   const std::vector<rom::LatentCoefficients>& coeffs,
                   const FitOptions& options = {});

Posterior posterior(const GPSurrogate& s, const fom::ParameterPoint& theta);

std::vector<rom::LatentCoefficients> sample_posterior(const GPSurrogate& s,
                                                      const fom::ParameterPoint& theta,
                                                      int n_samples, std::mt19937_64& rng);

struct Candidate {
  fom::ParameterPoint theta;
  Eigen::VectorXd initial_state;
};

struct GreedySettings {
  Eigen::VectorXd times;  // integration grid starting at 0
  double substep = 0.0;   // <= 0: mean step of `times`
  int n_samples = 20;
};

/// Mean over all space-time entries of the per-entry sample variance of the
/// decoded trajectories; +inf when a sample diverges.
double decoded_variance(const GPSurrogate& s, const rom::AutoencoderModel& model,
                        const Candidate& candidate, const GreedySettings& settings,
                        std::mt19937_64& rng);

/// Candidate indices by descending score (ties: lower index first), with scores.
struct Ranking {
  std::vector<std::size_t> order;
  std::vector<double> scores;
};
Ranking greedy_rank(const GPSurrogate& s, const rom::AutoencoderModel& model,
                    const std::vector<Candidate>& candidates, const GreedySettings& settings,
                    std::mt19937_64& rng);

/// Highest-scoring candidate; nullopt when `candidates` is empty.
std::optional<fom::ParameterPoint> greedy_select(const GPSurrogate& s,
                                                 const rom::AutoencoderModel& model,
                                                 const std::vector<Candidate>& candidates,
                                                 const GreedySettings& settings,
                                                 std::mt19937_64& rng);

}  // namespace lasdi::gp
