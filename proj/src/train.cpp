#include "lasdi/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

#include "lasdi/errors.hpp"
#include "lasdi/gp.hpp"

namespace lasdi::train {

void TrainConfig::validate() const {
  if (eta.recon < 0 || eta.ld < 0 || eta.rollout < 0 || eta.reg < 0)
    throw ConfigError("loss weights must be nonnegative");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (greedy_every <= 0) throw ConfigError("greedy_every must be positive");
  if (gp_samples < 1) throw ConfigError("gp_samples must be at least 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (!(horizon_cap > 0)) throw ConfigError("horizon_cap must be positive");
  if (!(substep_factor > 0)) throw ConfigError("substep_factor must be positive");
  if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
  for (int w : hidden_widths)
    if (w < 1) throw ConfigError("hidden widths must be positive");
}

TrainingData TrainingData::prepare(fom::Trajectory traj) {
  TrainingData d;
  d.spline = interp::CubicSpline<double>::fit(traj.times, traj.states);
  d.stencil = findiff::SeriesStencil::build(traj.times);
  d.trajectory = std::move(traj);
  return d;
}

std::size_t RolloutBatch::total() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.size();
  return n;
}

double anneal_horizon(int epoch, const TrainConfig& config, const fom::Trajectory& traj) {
  const double start = traj.mean_step();
  const double T = traj.times(traj.times.size() - 1);
  const double end = config.horizon_cap * T;
  const int ramp = config.ramp_epochs();
  if (epoch >= ramp || ramp <= 0) return end;
  const double f = static_cast<double>(std::max(epoch, 0)) / ramp;
  return start + f * (end - start);
}

namespace {

std::vector<Eigen::Index> rollable_frames(const fom::Trajectory& traj, double max_horizon) {
  std::vector<Eigen::Index> out;
  const double T = traj.times(traj.times.size() - 1);
  for (Eigen::Index j = 0; j < traj.times.size(); ++j)
    if (traj.times(j) + max_horizon <= T) out.push_back(j);
  return out;
}

}  // namespace

RolloutBatch sample_rollout_batch(std::span<const TrainingData> data,
                                  const std::vector<double>& max_horizons, std::mt19937_64& rng,
                                  std::ostream* log) {
  if (max_horizons.size() != data.size())
    throw DimensionError("sample_rollout_batch: one horizon per trajectory required");
  RolloutBatch batch;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(max_horizons[i] > 0.0)) throw DomainError("sample_rollout_batch: horizons must be positive");
    auto frames = rollable_frames(data[i].trajectory, max_horizons[i]);
    if (frames.empty() && log)
      *log << "rollout: no rollable frames for trajectory " << i << " (horizon "
           << max_horizons[i] << ")\n";
    std::uniform_real_distribution<double> dist(0.0, max_horizons[i]);
    Eigen::VectorXd h(static_cast<Eigen::Index>(frames.size()));
    for (Eigen::Index k = 0; k < h.size(); ++k) h(k) = dist(rng);
    batch.frames.push_back(std::move(frames));
    batch.horizons.push_back(std::move(h));
  }
  return batch;
}

RolloutBatch zero_horizon_batch(std::span<const TrainingData> data,
                                const std::vector<double>& max_horizons) {
  RolloutBatch batch;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto frames = rollable_frames(data[i].trajectory, max_horizons[i]);
    batch.horizons.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(frames.size())));
    batch.frames.push_back(std::move(frames));
  }
  return batch;
}

// ---- losses ----------------------------------------------------------------

namespace {

ad::Tape& tape_of(const rom::AutoencoderOnTape& model) {
  return *model.encoder.weights.front().tape();
}

double total_frames(std::span<const TrainingData> data) {
  double n = 0;
  for (const auto& d : data) n += static_cast<double>(d.trajectory.num_frames());
  return n;
}

void require_coefficients(const Coefficients& coeffs, std::span<const TrainingData> data) {
  if (coeffs.size() != data.size())
    throw ConfigError("latent coefficients missing: " + std::to_string(coeffs.size()) +
                      " sets for " + std::to_string(data.size()) + " trajectories");
}

ad::Tensor sum_terms(ad::Tape& tape, const std::vector<ad::Tensor>& terms) {
  if (terms.empty()) return tape.scalar(0.0);
  ad::Tensor acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = acc + terms[i];
  return acc;
}

ad::Tensor recon_from(const rom::AutoencoderOnTape& model, std::span<const TrainingData> data,
                      const std::vector<ad::Tensor>& inputs, const std::vector<ad::Tensor>& z) {
  std::vector<ad::Tensor> terms;
  for (std::size_t i = 0; i < data.size(); ++i)
    terms.push_back(ad::l1_norm(inputs[i] - model.decode(z[i])));
  return ad::scale(sum_terms(tape_of(model), terms), 1.0 / total_frames(data));
}

ad::Tensor ld_from(const Coefficients& coeffs, std::span<const TrainingData> data,
                   const std::vector<ad::Tensor>& z, ad::Tape& tape) {
  std::vector<ad::Tensor> terms;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ad::Tensor zdot = findiff::differentiate_series(data[i].stencil, z[i]);
    terms.push_back(ad::sq_l2_norm(zdot - rom::latent_rhs(z[i], coeffs[i])));
  }
  return ad::scale(sum_terms(tape, terms), 1.0 / total_frames(data));
}

ad::Tensor rollout_from(const rom::AutoencoderOnTape& model, const Coefficients& coeffs,
                        std::span<const TrainingData> data, const RolloutBatch& batch,
                        double substep_factor, const std::vector<ad::Tensor>& z) {
  ad::Tape& tape = tape_of(model);
  const std::size_t n_ro = batch.total();
  if (n_ro == 0) return tape.scalar(0.0);
  std::vector<ad::Tensor> terms;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& frames = batch.frames[i];
    if (frames.empty()) continue;
    const auto& traj = data[i].trajectory;
    const Eigen::VectorXd& h = batch.horizons[i];
    ad::Matrix target(static_cast<Eigen::Index>(frames.size()), traj.num_nodes());
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      target.row(r) = data[i].spline.eval(traj.times(frames[k]) + h(r));
    }
    const ad::Tensor z0 = ad::gather_rows(z[i], frames);
    const double substep = substep_factor * traj.mean_step();
    const ad::Tensor pred = model.decode(rom::rollout_latent(z0, h, coeffs[i], substep));
    terms.push_back(ad::l1_norm(tape.constant(std::move(target)) - pred));
  }
  return ad::scale(sum_terms(tape, terms), 1.0 / static_cast<double>(n_ro));
}

std::vector<ad::Tensor> constants_for(ad::Tape& tape, std::span<const TrainingData> data) {
  std::vector<ad::Tensor> out;
  for (const auto& d : data) out.push_back(tape.constant(d.trajectory.states));
  return out;
}

std::vector<ad::Tensor> encode_all(const rom::AutoencoderOnTape& model,
                                   const std::vector<ad::Tensor>& inputs) {
  std::vector<ad::Tensor> z;
  for (const auto& x : inputs) z.push_back(model.encode(x));
  return z;
}

}  // namespace

ad::Tensor loss_recon(const rom::AutoencoderOnTape& model, std::span<const TrainingData> data) {
  if (data.empty()) throw DomainError("loss_recon: no trajectories");
  const auto inputs = constants_for(tape_of(model), data);
  return recon_from(model, data, inputs, encode_all(model, inputs));
}

ad::Tensor loss_ld(const rom::AutoencoderOnTape& model, const Coefficients& coeffs,
                   std::span<const TrainingData> data) {
  require_coefficients(coeffs, data);
  const auto inputs = constants_for(tape_of(model), data);
  return ld_from(coeffs, data, encode_all(model, inputs), tape_of(model));
}

ad::Tensor loss_rollout(const rom::AutoencoderOnTape& model, const Coefficients& coeffs,
                        std::span<const TrainingData> data, const RolloutBatch& batch,
                        double substep_factor) {
  require_coefficients(coeffs, data);
  if (batch.frames.size() != data.size())
    throw DimensionError("loss_rollout: batch does not match trajectories");
  const auto inputs = constants_for(tape_of(model), data);
  return rollout_from(model, coeffs, data, batch, substep_factor, encode_all(model, inputs));
}

ad::Tensor regularizer(const Coefficients& coeffs) {
  if (coeffs.empty()) throw DomainError("regularizer: no coefficient sets");
  ad::Tape& tape = *coeffs.front().A.tape();
  std::vector<ad::Tensor> terms;
  for (const auto& c : coeffs) terms.push_back(ad::frobenius_sq(c.A) + ad::sq_l2_norm(c.b));
  return sum_terms(tape, terms);
}

ad::Tensor total_loss(const LossWeights& eta, const ad::Tensor& recon, const ad::Tensor& ld,
                      const std::optional<ad::Tensor>& rollout, const ad::Tensor& reg) {
  ad::Tensor total = ad::scale(recon, eta.recon) + ad::scale(ld, eta.ld);
  if (rollout && eta.rollout != 0.0) total = total + ad::scale(*rollout, eta.rollout);
  return total + ad::scale(reg, eta.reg);
}

LossTerms evaluate_objective(const rom::AutoencoderOnTape& model, const Coefficients& coeffs,
                             std::span<const TrainingData> data, const RolloutBatch* batch,
                             const LossWeights& eta, double substep_factor) {
  if (data.empty()) throw DomainError("evaluate_objective: no trajectories");
  require_coefficients(coeffs, data);
  ad::Tape& tape = tape_of(model);
  const auto inputs = constants_for(tape, data);
  const auto z = encode_all(model, inputs);

  LossTerms out;
  out.recon = recon_from(model, data, inputs, z);
  out.ld = ld_from(coeffs, data, z, tape);
  if (eta.rollout != 0.0) {
    if (!batch) throw UsageError("evaluate_objective: rollout weight set but no batch given");
    out.rollout = rollout_from(model, coeffs, data, *batch, substep_factor, z);
  }
  out.reg = regularizer(coeffs);
  out.total = total_loss(eta, out.recon, out.ld, out.rollout, out.reg);
  return out;
}

// ---- Adam ------------------------------------------------------------------

void Adam::step(const std::vector<ad::Matrix*>& params, const std::vector<ad::Matrix>& grads) {
  if (params.size() != grads.size()) throw DimensionError("adam: gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i].allFinite())
      throw NumericalError("adam: non-finite gradient in parameter block " + std::to_string(i) +
                           " (" + std::to_string(grads[i].rows()) + "x" +
                           std::to_string(grads[i].cols()) + ")");
    if (grads[i].rows() != params[i]->rows() || grads[i].cols() != params[i]->cols())
      throw DimensionError("adam: gradient shape mismatch in block " + std::to_string(i));
  }
  while (m_.size() < params.size()) {
    const auto& p = *params[m_.size()];
    m_.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
    t_.push_back(0);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ad::Matrix& g = grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    ++t_[i];
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_[i]));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_[i]));
    params[i]->array() -=
        lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

// ---- loop ------------------------------------------------------------------

std::vector<fom::ParameterPoint> TrainState::thetas() const {
  std::vector<fom::ParameterPoint> out;
  for (const auto& d : data) out.push_back(d.trajectory.theta);
  return out;
}

std::vector<ad::Matrix*> TrainState::network_blocks() {
  std::vector<ad::Matrix*> out;
  for (auto* mlp : {&model.encoder, &model.decoder})
    for (std::size_t l = 0; l < mlp->num_layers(); ++l) {
      out.push_back(&mlp->weights[l]);
      out.push_back(&mlp->biases[l]);
    }
  return out;
}

TrainState make_initial_state(const TrainConfig& config, std::vector<fom::Trajectory> initial) {
  config.validate();
  if (initial.empty()) throw ConfigError("training needs at least one initial trajectory");
  TrainState s;
  const int n_u = static_cast<int>(initial.front().num_nodes());
  s.model = rom::make_autoencoder(n_u, config.hidden_widths, config.latent_dim, config.seed,
                                  config.omega0);
  s.adam = Adam(config.learning_rate);
  s.rng.seed(config.seed ^ 0x9E3779B97F4A7C15ULL);
  for (auto& t : initial) {
    if (t.num_nodes() != n_u) throw ConfigError("initial trajectories differ in node count");
    s.data.push_back(TrainingData::prepare(std::move(t)));
    s.coefficients.push_back(rom::LatentCoefficients::zeros(config.latent_dim));
    s.origin.push_back(Origin::initial);
    s.trained_epochs.push_back(0);
  }
  return s;
}

EpochRecord train_epoch(TrainState& state, const TrainConfig& config, std::ostream* log) {
  const auto start = std::chrono::steady_clock::now();
  ad::Tape tape;
  const auto model = rom::attach(tape, state.model, true);
  Coefficients coeffs;
  for (const auto& c : state.coefficients) coeffs.push_back(rom::attach(tape, c, true));

  std::optional<RolloutBatch> batch;
  if (config.eta.rollout != 0.0) {
    std::vector<double> horizons;
    for (const auto& d : state.data)
      horizons.push_back(anneal_horizon(state.epoch, config, d.trajectory));
    batch = sample_rollout_batch(state.data, horizons, state.rng, log);
  }
  const LossTerms terms = evaluate_objective(model, coeffs, state.data, batch ? &*batch : nullptr,
                                             config.eta, config.substep_factor);
  tape.backward(terms.total);

  std::vector<ad::Matrix*> params = state.network_blocks();
  std::vector<ad::Matrix> grads;
  for (const auto* mlp : {&model.encoder, &model.decoder})
    for (std::size_t l = 0; l < mlp->weights.size(); ++l) {
      grads.push_back(mlp->weights[l].grad());
      grads.push_back(mlp->biases[l].grad());
    }
  // b is a column in LatentCoefficients but a (1 x L) row on the tape.
  std::vector<ad::Matrix> b_rows;
  b_rows.reserve(state.coefficients.size());
  for (std::size_t i = 0; i < state.coefficients.size(); ++i) {
    b_rows.push_back(state.coefficients[i].b.transpose());
    grads.push_back(coeffs[i].A.grad());
    grads.push_back(coeffs[i].b.grad());
  }
  for (std::size_t i = 0; i < state.coefficients.size(); ++i) {
    params.push_back(&state.coefficients[i].A);
    params.push_back(&b_rows[i]);
  }
  state.adam.step(params, grads);
  for (std::size_t i = 0; i < state.coefficients.size(); ++i)
    state.coefficients[i].b = b_rows[i].transpose();

  EpochRecord rec;
  rec.epoch = state.epoch + 1;
  rec.recon = terms.recon.item();
  rec.ld = terms.ld.item();
  if (terms.rollout) rec.rollout = terms.rollout->item();
  rec.reg = terms.reg.item();
  rec.total = terms.total.item();
  rec.n_train = static_cast<int>(state.data.size());
  for (auto& e : state.trained_epochs) ++e;
  ++state.epoch;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

bool acquire(TrainState& state, const TrainConfig& config, const Acquisition& acq,
             std::ostream* log) {
  const auto current = state.thetas();
  std::vector<gp::Candidate> candidates;
  for (const auto& theta : acq.pool) {
    if (std::find(current.begin(), current.end(), theta) != current.end()) continue;
    candidates.push_back({theta, acq.initial_state(theta)});
  }
  if (candidates.empty()) {
    if (log) *log << "greedy: candidate pool exhausted\n";
    return false;
  }
  gp::FitOptions fit;
  fit.seed = config.seed + static_cast<std::uint64_t>(state.epoch);
  const gp::GPSurrogate surrogate = gp::fit_gp(current, state.coefficients, fit);

  gp::GreedySettings settings;
  settings.times = acq.times;
  settings.n_samples = config.gp_samples;
  settings.substep = config.substep_factor * (acq.times(acq.times.size() - 1) - acq.times(0)) /
                     static_cast<double>(acq.times.size() - 1);
  const gp::Ranking ranking = gp::greedy_rank(surrogate, state.model, candidates, settings, state.rng);

  for (std::size_t idx : ranking.order) {
    const auto& theta = candidates[idx].theta;
    try {
      fom::Trajectory traj = acq.solve(theta);
      if (traj.num_nodes() != state.model.num_nodes())
        throw ConfigError("acquired trajectory has the wrong node count");
      if (log)
        *log << "greedy: epoch " << state.epoch << " adds (nu=" << theta.nu
             << ", omega=" << theta.omega << "), score " << ranking.scores[idx] << "\n";
      state.data.push_back(TrainingData::prepare(std::move(traj)));
      state.coefficients.push_back(rom::LatentCoefficients::zeros(config.latent_dim));
      state.origin.push_back(Origin::acquired);
      state.trained_epochs.push_back(0);
      return true;
    } catch (const NumericalError& e) {
      if (log) *log << "greedy: skipping (nu=" << theta.nu << ", omega=" << theta.omega
                    << "): " << e.what() << "\n";
    }
  }
  return false;
}

TrainResult train_loop(const TrainConfig& config, std::vector<fom::Trajectory> initial,
                       const Acquisition* acquisition, std::ostream* log,
                       const EpochHook& after_epoch) {
  TrainResult result{make_initial_state(config, std::move(initial)), {}, 0};
  TrainState& state = result.state;
  bool exhausted = acquisition == nullptr;
  for (int e = 0; e < config.epochs; ++e) {
    result.history.push_back(train_epoch(state, config, log));
    if (log && (state.epoch % 500 == 0 || state.epoch == 1)) {
      const auto& r = result.history.back();
      *log << "epoch " << r.epoch << " total " << r.total << " recon " << r.recon << " ld "
           << r.ld << " rollout " << r.rollout << "\n";
    }
    if (!exhausted && state.epoch % config.greedy_every == 0) {
      ++result.acquisitions_attempted;
      exhausted = !acquire(state, config, *acquisition, log);
    }
    if (after_epoch) after_epoch(state, result.history.back());
  }
  return result;
}

}  // namespace lasdi::train
