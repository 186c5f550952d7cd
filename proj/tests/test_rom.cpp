#include <doctest.h>

#include <cmath>
#include <random>

#include "lasdi/rom.hpp"
#include "support.hpp"

using namespace lasdi;
using ad::Matrix;
using rom::LatentCoefficients;
using lasdi::testing::central_differences;
using lasdi::testing::expm;
using lasdi::testing::random_matrix;
using lasdi::testing::random_stable_matrix;
using lasdi::testing::relative_gradient_error;

namespace {

LatentCoefficients random_stable_coefficients(int l, std::mt19937_64& rng) {
  LatentCoefficients c;
  c.A = random_stable_matrix(l, rng);
  c.b = random_matrix(l, 1, rng);
  return c;
}

// Exact solution of z' = A z + b from z0 over time t, through the augmented
// exponential exp([[A, b], [0, 0]] t).
Eigen::VectorXd exact_linear(const LatentCoefficients& c, const Eigen::VectorXd& z0, double t) {
  const int l = c.dim();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(l + 1, l + 1);
  aug.topLeftCorner(l, l) = c.A;
  aug.topRightCorner(l, 1) = c.b;
  Eigen::VectorXd x(l + 1);
  x << z0, 1.0;
  return (expm(aug * t) * x).head(l);
}

}  // namespace

TEST_CASE("network initialization") {
  const auto a = rom::init_mlp({4, 3, 2}, 7);
  const auto b = rom::init_mlp({4, 3, 2}, 7);
  const auto c = rom::init_mlp({4, 3, 2}, 8);
  REQUIRE(a.weights.size() == 2);
  CHECK(a.weights[0].rows() == 3);
  CHECK(a.weights[0].cols() == 4);
  CHECK(a.weights[1].rows() == 2);
  CHECK(a.weights[1].cols() == 3);
  CHECK(a.weights[0] == b.weights[0]);
  CHECK(a.weights[1] == b.weights[1]);
  CHECK(a.weights[0] != c.weights[0]);
  CHECK(a.biases[0] == Matrix::Zero(1, 3));
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= 1.0 / 4);
  CHECK(a.weights[1].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 3) / 30.0);
  CHECK_THROWS_AS(rom::init_mlp({}, 0), DomainError);
  CHECK_THROWS_AS(rom::init_mlp({4}, 0), DomainError);
}

TEST_CASE("pre-activation variance at initialization") {
  // Hidden layers past the first see sin outputs of the previous layer; their
  // pre-activations omega0 * (x W^T + b) should have variance near one.
  const int width = 256;
  const auto net = rom::init_mlp({16, width, width, width, 2}, 21);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(10000, 16);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  Matrix h = x;
  for (std::size_t l = 0; l + 1 < net.num_layers(); ++l) {
    const Matrix pre = net.omega0 * ((h * net.weights[l].transpose()).rowwise() +
                                     net.biases[l].row(0));
    const double mean = pre.mean();
    const double var = (pre.array() - mean).square().mean();
    CAPTURE(l);
    CAPTURE(var);
    if (l > 0) {
      CHECK(var >= 0.5);
      CHECK(var <= 2.0);
    }
    h = pre.array().sin().matrix();
  }
}

TEST_CASE("autoencoder shapes and determinism") {
  const auto model = rom::make_autoencoder(12, {8, 6}, 3, 5);
  CHECK(model.decoder.widths == std::vector<int>{3, 6, 8, 12});
  std::mt19937_64 rng(2);
  const Matrix u = random_matrix(7, 12, rng);
  const Matrix z = rom::encode(model, u);
  CHECK(z.rows() == 7);
  CHECK(z.cols() == 3);
  CHECK(z == rom::encode(model, u));
  const Matrix r = rom::decode(model, z);
  CHECK(r.rows() == 7);
  CHECK(r.cols() == 12);
  CHECK(r.allFinite());
  CHECK_THROWS_AS(rom::encode(model, Matrix::Zero(2, 11)), DimensionError);
  CHECK_THROWS_AS(rom::decode(model, Matrix::Zero(2, 4)), DimensionError);
}

TEST_CASE("taped encoder and decoder gradients match finite differences") {
  auto model = rom::make_autoencoder(6, {5}, 3, 9);
  std::mt19937_64 rng(4);
  const Matrix u = random_matrix(4, 6, rng);
  for (bool through_decoder : {false, true}) {
    CAPTURE(through_decoder);
    auto loss_of = [&](ad::Tape& tape, const rom::AutoencoderOnTape& m) {
      const ad::Tensor z = m.encode(tape.constant(u));
      return ad::sum(through_decoder ? m.decode(z) : z);
    };
    ad::Tape tape;
    const auto m = rom::attach(tape, model);
    tape.backward(loss_of(tape, m));
    std::vector<Matrix> analytic;
    std::vector<Matrix*> params;
    for (auto* net : {&model.encoder, &model.decoder})
      for (std::size_t l = 0; l < net->num_layers(); ++l) {
        params.push_back(&net->weights[l]);
        params.push_back(&net->biases[l]);
      }
    for (const auto* net : {&m.encoder, &m.decoder})
      for (std::size_t l = 0; l < net->weights.size(); ++l) {
        analytic.push_back(net->weights[l].grad());
        analytic.push_back(net->biases[l].grad());
      }
    auto f = [&] {
      ad::Tape t;
      return loss_of(t, rom::attach(t, model)).item();
    };
    CHECK(relative_gradient_error(analytic, central_differences(f, params)) < 1e-6);
  }
}

TEST_CASE("latent right-hand side") {
  auto c = LatentCoefficients::zeros(2);
  Eigen::VectorXd z(2);
  z << 1.0, 2.0;
  CHECK(rom::latent_rhs<double>(z, c) == Eigen::VectorXd::Zero(2));
  c.A = Matrix::Identity(2, 2);
  CHECK(rom::latent_rhs<double>(z, c) == z);
  c.A.setZero();
  c.b << 1.0, -1.0;
  CHECK(rom::latent_rhs<double>(z, c) == c.b);
  CHECK_THROWS_AS(rom::latent_rhs<double>(Eigen::VectorXd::Zero(3), c), DimensionError);
}

TEST_CASE("RK4 step closed forms") {
  auto c = LatentCoefficients::zeros(2);
  c.b << 0.3, -1.1;
  Eigen::VectorXd z(2);
  z << 1.0, 2.0;
  const double h = 0.37;
  CHECK((rom::rk4_step<double>(z, h, c) - (z + h * c.b)).cwiseAbs().maxCoeff() < 1e-15);

  auto s = LatentCoefficients::zeros(1);
  s.A(0, 0) = -1.3;
  Eigen::VectorXd z1(1);
  z1 << 0.8;
  const double ah = -1.3 * h;
  const double poly = 1 + ah + ah * ah / 2 + ah * ah * ah / 6 + ah * ah * ah * ah / 24;
  CHECK(std::abs(rom::rk4_step<double>(z1, h, s)(0) - 0.8 * poly) < 1e-15);
}

TEST_CASE("RK4 global error is fourth order") {
  std::mt19937_64 rng(12);
  const auto c = random_stable_coefficients(3, rng);
  const Eigen::VectorXd z0 = random_matrix(3, 1, rng);
  const Eigen::VectorXd exact = exact_linear(c, z0, 1.0);
  std::vector<double> h, err;
  for (int n : {8, 16, 32, 64}) {
    const Eigen::VectorXd z = rom::rollout_latent<double>(z0, 0.0, 1.0, c, 1.0 / n);
    h.push_back(1.0 / n);
    err.push_back((z - exact).cwiseAbs().maxCoeff());
  }
  const double slope = lasdi::testing::loglog_slope(h, err);
  CAPTURE(slope);
  CHECK(slope >= 3.8);
  CHECK(slope <= 4.2);
}

TEST_CASE("rollout cases") {
  std::mt19937_64 rng(6);
  const auto c = random_stable_coefficients(5, rng);
  const Eigen::VectorXd z0 = random_matrix(5, 1, rng);
  CHECK(rom::rollout_latent<double>(z0, 0.4, 0.4, c, 0.1) == z0);
  CHECK_THROWS_AS(rom::rollout_latent<double>(z0, 0.4, 0.3, c, 0.1), DomainError);

  auto drift = LatentCoefficients::zeros(1);
  drift.b << 2.0;
  Eigen::VectorXd y0(1);
  y0 << 0.25;
  CHECK(std::abs(rom::rollout_latent<double>(y0, 0.0, 0.5, drift, 0.07)(0) - 1.25) < 1e-14);

  // Fine-step self-oracle over horizon 1.
  const Eigen::VectorXd coarse = rom::rollout_latent<double>(z0, 0.0, 1.0, c, 0.01);
  const Eigen::VectorXd fine = rom::rollout_latent<double>(z0, 0.0, 1.0, c, 0.0001);
  CHECK((coarse - fine).cwiseAbs().maxCoeff() < 1e-8);

  // Semigroup with aligned substeps.
  const Eigen::VectorXd whole = rom::rollout_latent<double>(z0, 0.0, 0.7, c, 0.1);
  const Eigen::VectorXd mid = rom::rollout_latent<double>(z0, 0.0, 0.3, c, 0.1);
  const Eigen::VectorXd split = rom::rollout_latent<double>(mid, 0.3, 0.7, c, 0.1);
  CHECK((whole - split).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rollout prediction") {
  const auto model = rom::make_autoencoder(10, {7}, 2, 3);
  std::mt19937_64 rng(8);
  const auto c = random_stable_coefficients(2, rng);
  const Eigen::VectorXd u = random_matrix(10, 1, rng);
  const Eigen::VectorXd same = rom::rollout_predict(model, c, u, 0.3, 0.0, 0.1);
  const Matrix recon = rom::decode(model, rom::encode(model, u.transpose()));
  CHECK(same.size() == 10);
  CHECK((same.transpose() - recon).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::VectorXd times(4);
  times << 0.0, 0.1, 0.25, 0.4;
  const Matrix traj = rom::predict_trajectory(model, c, u, times, 0.05);
  CHECK(traj.rows() == 4);
  CHECK(traj.cols() == 10);
  CHECK((traj.row(0) - recon).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::VectorXd later = rom::rollout_predict(model, c, u, 0.0, 0.25, 0.05);
  CHECK((traj.row(2) - later.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("taped rollout agrees with the plain one, row by row") {
  std::mt19937_64 rng(10);
  const auto c = random_stable_coefficients(3, rng);
  const Matrix z0 = random_matrix(4, 3, rng);
  Eigen::VectorXd horizons(4);
  horizons << 0.0, 0.05, 0.23, 0.4;
  ad::Tape tape;
  const auto ct = rom::attach(tape, c);
  const ad::Tensor z = rom::rollout_latent(tape.constant(z0), horizons, ct, 0.1);
  for (int r = 0; r < 4; ++r) {
    const Eigen::VectorXd expect =
        rom::rollout_latent<double>(z0.row(r).transpose(), 0.0, horizons(r), c, 0.1);
    CHECK((z.value().row(r).transpose() - expect).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("rollout gradient with respect to the coefficients") {
  auto model = rom::make_autoencoder(8, {6}, 2, 13);
  std::mt19937_64 rng(14);
  auto c = random_stable_coefficients(2, rng);
  const Matrix u = random_matrix(3, 8, rng);
  const Matrix target = random_matrix(3, 8, rng);
  Eigen::VectorXd horizons(3);
  horizons << 0.1, 0.35, 0.2;
  auto loss_of = [&](ad::Tape& tape, const rom::AutoencoderOnTape& m,
                     const rom::CoefficientsOnTape& ct) {
    const ad::Tensor pred = rom::rollout_predict(m, ct, tape.constant(u), horizons, 0.1);
    return ad::l1_norm(ad::sub(pred, tape.constant(target)));
  };
  ad::Tape tape;
  const auto m = rom::attach(tape, model);
  const auto ct = rom::attach(tape, c);
  tape.backward(loss_of(tape, m, ct));
  Matrix b_row = c.b.transpose();
  std::vector<Matrix*> params{&c.A, &b_row};
  auto f = [&] {
    c.b = b_row.transpose();
    ad::Tape t;
    return loss_of(t, rom::attach(t, model), rom::attach(t, c)).item();
  };
  const double err = relative_gradient_error({ct.A.grad(), ct.b.grad()}, central_differences(f, params));
  CHECK(err < 1e-5);
}
