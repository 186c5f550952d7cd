#include "lasdi/rom.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace lasdi::rom {

Eigen::Index MLP::num_parameters() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void MLP::validate() const {
  if (widths.size() < 2) throw DomainError("MLP: need at least input and output widths");
  if (weights.size() != widths.size() - 1 || biases.size() != weights.size())
    throw DimensionError("MLP: layer count does not match widths");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != widths[l + 1] || weights[l].cols() != widths[l])
      throw DimensionError("MLP: weight " + std::to_string(l) + " does not match widths");
    if (biases[l].rows() != 1 || biases[l].cols() != widths[l + 1])
      throw DimensionError("MLP: bias " + std::to_string(l) + " does not match widths");
  }
}

Matrix MLP::forward(const Eigen::Ref<const Matrix>& x) const {
  if (x.cols() != input_width())
    throw DimensionError("MLP forward: input width " + std::to_string(x.cols()) +
                         ", expected " + std::to_string(input_width()));
  Matrix h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Matrix pre = h * weights[l].transpose();
    pre.rowwise() += biases[l].row(0);
    if (l + 1 < weights.size()) {
      h = (omega0 * pre.array()).sin().matrix();
    } else {
      h = std::move(pre);
    }
  }
  return h;
}

MLP init_mlp(const std::vector<int>& widths, std::uint64_t seed, double omega0) {
  if (widths.size() < 2) throw DomainError("init_mlp: need at least two widths");
  for (int w : widths)
    if (w <= 0) throw DomainError("init_mlp: widths must be positive");

  MLP mlp;
  mlp.widths = widths;
  mlp.omega0 = omega0;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double fan_in = widths[l];
    const double bound = l == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / omega0;
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(widths[l + 1], widths[l]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(Matrix::Zero(1, widths[l + 1]));
  }
  return mlp;
}

void AutoencoderModel::validate() const {
  encoder.validate();
  decoder.validate();
  if (encoder.output_width() != decoder.input_width())
    throw DimensionError("autoencoder: encoder output width differs from decoder input width");
  if (encoder.input_width() != decoder.output_width())
    throw DimensionError("autoencoder: encoder input width differs from decoder output width");
}

AutoencoderModel make_autoencoder(int n_u, const std::vector<int>& hidden, int latent,
                                  std::uint64_t seed, double omega0) {
  std::vector<int> widths;
  widths.push_back(n_u);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(latent);
  std::vector<int> reversed(widths.rbegin(), widths.rend());
  AutoencoderModel m;
  m.seed = seed;
  m.encoder = init_mlp(widths, seed, omega0);
  m.decoder = init_mlp(reversed, seed + 1, omega0);
  return m;
}

Matrix encode(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& u) {
  return model.encoder.forward(u);
}

Matrix decode(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& z) {
  return model.decoder.forward(z);
}

Matrix integrate_latent(const Eigen::VectorXd& z0, const LatentCoefficients& c,
                        const Eigen::VectorXd& times, double substep) {
  Matrix z(times.size(), z0.size());
  Eigen::VectorXd cur = z0;
  z.row(0) = cur.transpose();
  for (Eigen::Index j = 1; j < times.size(); ++j) {
    cur = rollout_latent<double>(cur, times(j - 1), times(j), c, substep);
    if (!cur.allFinite())
      throw NumericalError("latent integration diverged at t = " + std::to_string(times(j)));
    z.row(j) = cur.transpose();
  }
  return z;
}

Eigen::VectorXd rollout_predict(const AutoencoderModel& model, const LatentCoefficients& c,
                                const Eigen::VectorXd& u_t, double t, double dt,
                                double substep) {
  if (dt < 0.0) throw DomainError("rollout_predict: dt must be nonnegative");
  const Eigen::VectorXd z0 = encode(model, u_t.transpose()).row(0).transpose();
  const Eigen::VectorXd z1 = rollout_latent<double>(z0, t, t + dt, c, substep);
  return decode(model, z1.transpose()).row(0).transpose();
}

Matrix predict_trajectory(const AutoencoderModel& model, const LatentCoefficients& c,
                          const Eigen::VectorXd& u0, const Eigen::VectorXd& times,
                          double substep) {
  const Eigen::VectorXd z0 = encode(model, u0.transpose()).row(0).transpose();
  return decode(model, integrate_latent(z0, c, times, substep));
}

// ---- taped -----------------------------------------------------------------

ad::Tensor MlpOnTape::forward(const ad::Tensor& x) const {
  if (weights.empty()) throw UsageError("MLP is not attached");
  if (x.cols() != weights.front().cols())
    throw DimensionError("MLP forward: input width " + std::to_string(x.cols()) + ", expected " +
                         std::to_string(weights.front().cols()));
  ad::Tensor h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    ad::Tensor pre = ad::add_rowwise(ad::matmul(h, ad::transpose(weights[l])), biases[l]);
    h = l + 1 < weights.size() ? ad::sin(ad::scale(pre, omega0)) : pre;
  }
  return h;
}

MlpOnTape attach(ad::Tape& tape, const MLP& mlp, bool trainable) {
  MlpOnTape out;
  out.omega0 = mlp.omega0;
  for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
    out.weights.push_back(trainable ? tape.variable(mlp.weights[l]) : tape.constant(mlp.weights[l]));
    out.biases.push_back(trainable ? tape.variable(mlp.biases[l]) : tape.constant(mlp.biases[l]));
  }
  return out;
}

AutoencoderOnTape attach(ad::Tape& tape, const AutoencoderModel& model, bool trainable) {
  return {attach(tape, model.encoder, trainable), attach(tape, model.decoder, trainable)};
}

CoefficientsOnTape attach(ad::Tape& tape, const LatentCoefficients& c, bool trainable) {
  Matrix a = c.A;
  Matrix b = c.b.transpose();
  if (trainable) return {tape.variable(std::move(a)), tape.variable(std::move(b))};
  return {tape.constant(std::move(a)), tape.constant(std::move(b))};
}

ad::Tensor latent_rhs(const ad::Tensor& z, const CoefficientsOnTape& c) {
  if (z.cols() != c.A.rows()) throw DimensionError("latent_rhs: latent size mismatch");
  return ad::add_rowwise(ad::matmul(z, ad::transpose(c.A)), c.b);
}

ad::Tensor rk4_step(const ad::Tensor& z, const Eigen::VectorXd& h, const CoefficientsOnTape& c) {
  const Eigen::VectorXd half = h / 2.0;
  const ad::Tensor k1 = latent_rhs(z, c);
  const ad::Tensor k2 = latent_rhs(z + ad::scale_rows(k1, half), c);
  const ad::Tensor k3 = latent_rhs(z + ad::scale_rows(k2, half), c);
  const ad::Tensor k4 = latent_rhs(z + ad::scale_rows(k3, h), c);
  const ad::Tensor incr = k1 + 2.0 * k2 + 2.0 * k3 + k4;
  return z + ad::scale_rows(incr, h / 6.0);
}

ad::Tensor rk4_step(const ad::Tensor& z, double h, const CoefficientsOnTape& c) {
  return rk4_step(z, Eigen::VectorXd::Constant(z.rows(), h), c);
}

ad::Tensor rollout_latent(const ad::Tensor& z0, const Eigen::VectorXd& horizons,
                          const CoefficientsOnTape& c, double substep) {
  if (horizons.size() != z0.rows())
    throw DimensionError("rollout_latent: one horizon per latent row required");
  Eigen::VectorXi steps(horizons.size());
  Eigen::VectorXd h(horizons.size());
  long max_steps = 0;
  for (Eigen::Index r = 0; r < horizons.size(); ++r) {
    if (horizons(r) < 0.0) throw DomainError("rollout_latent: negative horizon");
    steps(r) = static_cast<int>(rk4_step_count(horizons(r), substep));
    h(r) = steps(r) > 0 ? horizons(r) / steps(r) : 0.0;
    max_steps = std::max<long>(max_steps, steps(r));
  }
  ad::Tensor z = z0;
  for (long s = 0; s < max_steps; ++s) {
    Eigen::VectorXd hs = h;
    for (Eigen::Index r = 0; r < hs.size(); ++r)
      if (s >= steps(r)) hs(r) = 0.0;
    z = rk4_step(z, hs, c);
  }
  return z;
}

ad::Tensor rollout_latent(const ad::Tensor& z0, double t0, double t1, const CoefficientsOnTape& c,
                          double substep) {
  if (t1 < t0) throw DomainError("rollout_latent: t1 < t0");
  return rollout_latent(z0, Eigen::VectorXd::Constant(z0.rows(), t1 - t0), c, substep);
}

ad::Tensor rollout_predict(const AutoencoderOnTape& model, const CoefficientsOnTape& c,
                           const ad::Tensor& u_t, const Eigen::VectorXd& horizons,
                           double substep) {
  return model.decode(rollout_latent(model.encode(u_t), horizons, c, substep));
}

}  // namespace lasdi::rom
