#pragma once

// Autoencoder, linear latent dynamics dz/dt = A z + b, and RK4 rollout.
//
// Every operation exists twice: a plain Eigen version used for inference and
// a taped version used during training. Batches are stored one sample per row.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "lasdi/errors.hpp"
#include "lasdi/gradtape.hpp"

namespace lasdi::rom {

using ad::Matrix;

/// Fully connected network; hidden layers apply sin(omega0 * (x W^T + b)),
/// the output layer is affine. weights[l] has shape (widths[l+1] x widths[l]).
struct MLP {
  std::vector<int> widths;
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;  // (1 x widths[l+1])
  double omega0 = 30.0;

  std::size_t num_layers() const { return weights.size(); }
  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  Eigen::Index num_parameters() const;
  void validate() const;

  Matrix forward(const Eigen::Ref<const Matrix>& x) const;
};

/// First layer U(-1/fan_in, 1/fan_in), deeper layers
/// U(-sqrt(6/fan_in)/omega0, sqrt(6/fan_in)/omega0), zero biases.
MLP init_mlp(const std::vector<int>& widths, std::uint64_t seed, double omega0 = 30.0);

struct AutoencoderModel {
  MLP encoder;
  MLP decoder;
  std::uint64_t seed = 0;

  int latent_dim() const { return encoder.output_width(); }
  int num_nodes() const { return encoder.input_width(); }
  void validate() const;
};

/// Encoder widths [n_u, hidden..., latent]; the decoder uses the reversed list.
AutoencoderModel make_autoencoder(int n_u, const std::vector<int>& hidden, int latent,
                                  std::uint64_t seed, double omega0 = 30.0);

Matrix encode(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& u);
Matrix decode(const AutoencoderModel& model, const Eigen::Ref<const Matrix>& z);

template <typename Scalar>
struct LatentCoefficientsT {
  using MatrixL = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using VectorL = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  MatrixL A;
  VectorL b;

  static LatentCoefficientsT zeros(int latent) {
    return {MatrixL::Zero(latent, latent), VectorL::Zero(latent)};
  }
  int dim() const { return static_cast<int>(b.size()); }
  bool all_finite() const { return A.allFinite() && b.allFinite(); }

  /// A row-major followed by b: L^2 + L entries.
  VectorL flatten() const {
    const int l = dim();
    VectorL out(l * l + l);
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < l; ++j) out(i * l + j) = A(i, j);
    out.tail(l) = b;
    return out;
  }
  static LatentCoefficientsT unflatten(const Eigen::Ref<const VectorL>& flat, int latent) {
    if (flat.size() != latent * latent + latent)
      throw DimensionError("latent coefficients: flat size does not match latent dimension");
    LatentCoefficientsT c = zeros(latent);
    for (int i = 0; i < latent; ++i)
      for (int j = 0; j < latent; ++j) c.A(i, j) = flat(i * latent + j);
    c.b = flat.tail(latent);
    return c;
  }
};

using LatentCoefficients = LatentCoefficientsT<double>;

/// Number of equal RK4 steps that cover `span` with steps no longer than
/// `substep` (aligned spans are not split by round-off).
inline long rk4_step_count(double span, double substep) {
  if (!(substep > 0.0)) throw DomainError("rollout: substep must be positive");
  if (span <= 0.0) return 0;
  return std::max(1L, static_cast<long>(std::ceil(span / substep - 1e-9)));
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> latent_rhs(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z, const LatentCoefficientsT<Scalar>& c) {
  if (z.size() != c.dim()) throw DimensionError("latent_rhs: latent size mismatch");
  return c.A * z + c.b;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rk4_step(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z,
                                                  Scalar h, const LatentCoefficientsT<Scalar>& c) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Vec k1 = latent_rhs<Scalar>(z, c);
  const Vec k2 = latent_rhs<Scalar>(z + (h / 2) * k1, c);
  const Vec k3 = latent_rhs<Scalar>(z + (h / 2) * k2, c);
  const Vec k4 = latent_rhs<Scalar>(z + h * k3, c);
  return z + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// ceil((t1 - t0) / substep) equal RK4 steps from t0 to t1.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rollout_latent(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z0, Scalar t0, Scalar t1,
    const LatentCoefficientsT<Scalar>& c, Scalar substep) {
  if (t1 < t0) throw DomainError("rollout_latent: t1 < t0");
  const long n = rk4_step_count(static_cast<double>(t1 - t0), static_cast<double>(substep));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z = z0;
  if (n == 0) return z;
  const Scalar h = (t1 - t0) / static_cast<Scalar>(n);
  for (long i = 0; i < n; ++i) z = rk4_step<Scalar>(z, h, c);
  return z;
}

/// decode(rollout_latent(encode(u_t), t, t + dt)).
Eigen::VectorXd rollout_predict(const AutoencoderModel& model, const LatentCoefficients& c,
                                const Eigen::VectorXd& u_t, double t, double dt, double substep);

/// Encodes u0, steps the latent state through `times` (times(0) is the
/// encoding time) and decodes every latent state.
Matrix predict_trajectory(const AutoencoderModel& model, const LatentCoefficients& c,
                          const Eigen::VectorXd& u0, const Eigen::VectorXd& times,
                          double substep);

/// Latent states (rows) at every time, starting from z0 at times(0).
Matrix integrate_latent(const Eigen::VectorXd& z0, const LatentCoefficients& c,
                        const Eigen::VectorXd& times, double substep);

// ---- taped counterparts ----------------------------------------------------

struct MlpOnTape {
  std::vector<ad::Tensor> weights;
  std::vector<ad::Tensor> biases;
  double omega0 = 30.0;

  ad::Tensor forward(const ad::Tensor& x) const;
};

MlpOnTape attach(ad::Tape& tape, const MLP& mlp, bool trainable = true);

struct AutoencoderOnTape {
  MlpOnTape encoder;
  MlpOnTape decoder;

  ad::Tensor encode(const ad::Tensor& u) const { return encoder.forward(u); }
  ad::Tensor decode(const ad::Tensor& z) const { return decoder.forward(z); }
};

AutoencoderOnTape attach(ad::Tape& tape, const AutoencoderModel& model, bool trainable = true);

/// A is (L x L), b is (1 x L).
struct CoefficientsOnTape {
  ad::Tensor A;
  ad::Tensor b;
};

CoefficientsOnTape attach(ad::Tape& tape, const LatentCoefficients& c, bool trainable = true);

/// Z A^T + b for a batch of latent rows.
ad::Tensor latent_rhs(const ad::Tensor& z, const CoefficientsOnTape& c);

/// One RK4 step with a per-row step size (h(r) == 0 leaves row r unchanged).
ad::Tensor rk4_step(const ad::Tensor& z, const Eigen::VectorXd& h, const CoefficientsOnTape& c);
ad::Tensor rk4_step(const ad::Tensor& z, double h, const CoefficientsOnTape& c);

/// Row r advances by horizons(r) using rk4_step_count(horizons(r), substep)
/// equal steps.
ad::Tensor rollout_latent(const ad::Tensor& z0, const Eigen::VectorXd& horizons,
                          const CoefficientsOnTape& c, double substep);
ad::Tensor rollout_latent(const ad::Tensor& z0, double t0, double t1, const CoefficientsOnTape& c,
                          double substep);

ad::Tensor rollout_predict(const AutoencoderOnTape& model, const CoefficientsOnTape& c,
                           const ad::Tensor& u_t, const Eigen::VectorXd& horizons,
                           double substep);

}  // namespace lasdi::rom
