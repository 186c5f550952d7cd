#pragma once

// Joint training of the autoencoder and per-parameter latent coefficients.
//
//   total = eta1 * recon + eta2 * ld + eta3 * rollout + eta4 * sum(|A|_F^2 + |b|^2)
//
// recon   = (1/N_t)  sum over frames of |u - dec(enc(u))|_1
// ld      = (1/N_t)  sum over frames of |dz_fd - (A z + b)|_2^2
// rollout = (1/N_ro) sum over rollable frames of |spline(t + dt) - dec(RK4(enc(u(t)), dt))|_1

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "lasdi/findiff.hpp"
#include "lasdi/fom.hpp"
#include "lasdi/gradtape.hpp"
#include "lasdi/interp.hpp"
#include "lasdi/rom.hpp"

namespace lasdi::train {

struct LossWeights {
  double recon = 1.0;
  double ld = 1.0;
  double rollout = 1.0;
  double reg = 0.001;
};

struct TrainConfig {
  LossWeights eta;
  double learning_rate = 1e-3;
  int epochs = 17500;
  int greedy_every = 2500;
  int gp_samples = 20;
  double horizon_cap = 0.1;      // plateau horizon as a fraction of T
  int horizon_ramp_epochs = -1;  // < 0: half of `epochs`
  double substep_factor = 1.0;   // RK4 substep = factor * mean data step
  std::vector<int> hidden_widths{250, 100, 100, 100};
  int latent_dim = 5;
  double omega0 = 30.0;
  std::uint64_t seed = 0;

  void validate() const;
  int ramp_epochs() const { return horizon_ramp_epochs < 0 ? epochs / 2 : horizon_ramp_epochs; }
};

/// A trajectory with its derived training structures (fixed for a run).
struct TrainingData {
  fom::Trajectory trajectory;
  interp::CubicSpline<double> spline;
  findiff::SeriesStencil stencil;

  static TrainingData prepare(fom::Trajectory traj);
  double final_time() const { return trajectory.times(trajectory.times.size() - 1); }
};

/// Per trajectory: the rollable frame indices and their sampled horizons.
struct RolloutBatch {
  std::vector<std::vector<Eigen::Index>> frames;
  std::vector<Eigen::VectorXd> horizons;

  std::size_t count(std::size_t i) const { return frames[i].size(); }
  std::size_t total() const;
};

/// Linear ramp from one mean data step at epoch 0 to horizon_cap * T at
/// the end of the ramp, constant afterwards.
double anneal_horizon(int epoch, const TrainConfig& config, const fom::Trajectory& traj);

/// Every frame with t_j + max_horizon <= T, each with an independent
/// U(0, max_horizon) horizon. Draws are consumed in trajectory/frame order.
RolloutBatch sample_rollout_batch(std::span<const TrainingData> data,
                                  const std::vector<double>& max_horizons, std::mt19937_64& rng,
                                  std::ostream* log = nullptr);

/// Rollout batch where every rollable frame has horizon 0.
RolloutBatch zero_horizon_batch(std::span<const TrainingData> data,
                                const std::vector<double>& max_horizons);

// ---- losses (taped) --------------------------------------------------------

using Coefficients = std::vector<rom::CoefficientsOnTape>;

ad::Tensor loss_recon(const rom::AutoencoderOnTape& model, std::span<const TrainingData> data);
ad::Tensor loss_ld(const rom::AutoencoderOnTape& model, const Coefficients& coeffs,
                   std::span<const TrainingData> data);
ad::Tensor loss_rollout(const rom::AutoencoderOnTape& model, const Coefficients& coeffs,
                        std::span<const TrainingData> data, const RolloutBatch& batch,
                        double substep_factor);
ad::Tensor regularizer(const Coefficients& coeffs);
ad::Tensor total_loss(const LossWeights& eta, const ad::Tensor& recon, const ad::Tensor& ld,
                      const std::optional<ad::Tensor>& rollout, const ad::Tensor& reg);

struct LossTerms {
  ad::Tensor recon, ld, reg, total;
  std::optional<ad::Tensor> rollout;  // absent when eta.rollout == 0
};

/// All terms with one encoder pass per trajectory shared between them.
LossTerms evaluate_objective(const rom::AutoencoderOnTape& model, const Coefficients& coeffs,
                             std::span<const TrainingData> data, const RolloutBatch* batch,
                             const LossWeights& eta, double substep_factor);

// ---- optimizer -------------------------------------------------------------

class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// params[i] is updated with grads[i]; slots are created on first sight
  /// and keep their own step count.
  void step(const std::vector<ad::Matrix*>& params, const std::vector<ad::Matrix>& grads);

  double learning_rate() const { return lr_; }
  std::size_t num_slots() const { return m_.size(); }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<ad::Matrix> m_, v_;
  std::vector<long> t_;
};

// ---- loop ------------------------------------------------------------------

enum class Origin : int { test = 0, initial = 1, acquired = 2 };

struct TrainState {
  rom::AutoencoderModel model;
  std::vector<TrainingData> data;
  std::vector<rom::LatentCoefficients> coefficients;
  std::vector<Origin> origin;
  std::vector<int> trained_epochs;
  Adam adam;
  int epoch = 0;
  std::mt19937_64 rng;

  std::vector<fom::ParameterPoint> thetas() const;
  /// Encoder then decoder (weight, bias) blocks, in optimizer order.
  std::vector<ad::Matrix*> network_blocks();
};

struct EpochRecord {
  int epoch = 0;
  double recon = 0, ld = 0, rollout = std::numeric_limits<double>::quiet_NaN(), reg = 0, total = 0;
  double wall_seconds = 0;
  int n_train = 0;
};

/// How the loop obtains new trajectories during greedy sampling.
struct Acquisition {
  std::vector<fom::ParameterPoint> pool;
  std::function<fom::Trajectory(const fom::ParameterPoint&)> solve;
  std::function<Eigen::VectorXd(const fom::ParameterPoint&)> initial_state;
  Eigen::VectorXd times;  // grid for the FOM-space variance estimate
};

struct TrainResult {
  TrainState state;
  std::vector<EpochRecord> history;
  int acquisitions_attempted = 0;
};

TrainState make_initial_state(const TrainConfig& config, std::vector<fom::Trajectory> initial);

/// One full-batch gradient step; returns the recorded losses.
EpochRecord train_epoch(TrainState& state, const TrainConfig& config, std::ostream* log = nullptr);

/// Adds one greedily selected parameter. Returns false when the pool is exhausted.
bool acquire(TrainState& state, const TrainConfig& config, const Acquisition& acq,
             std::ostream* log = nullptr);

/// Called after every epoch (and after any acquisition that follows it).
using EpochHook = std::function<void(const TrainState&, const EpochRecord&)>;

TrainResult train_loop(const TrainConfig& config, std::vector<fom::Trajectory> initial,
                       const Acquisition* acquisition, std::ostream* log = nullptr,
                       const EpochHook& after_epoch = {});

}  // namespace lasdi::train
