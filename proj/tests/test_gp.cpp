#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lasdi/gp.hpp"
#include "support.hpp"
#include "toy.hpp"

using namespace lasdi;
using fom::ParameterPoint;

namespace {

// Smooth coefficient sets (L = 2) as a function of theta.
rom::LatentCoefficients smooth_coefficients(const ParameterPoint& th) {
  auto c = rom::LatentCoefficients::zeros(2);
  c.A << -th.nu * 4.0, std::sin(th.omega), 0.5 * th.omega * th.nu, -1.0 + th.omega;
  c.b << std::cos(3.0 * th.nu), th.omega * th.omega;
  return c;
}

std::vector<ParameterPoint> scattered_thetas(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> nu(0.05, 0.25), om(0.5, 1.5);
  std::vector<ParameterPoint> out;
  for (int i = 0; i < n; ++i) out.push_back({nu(rng), om(rng)});
  return out;
}

gp::GPSurrogate fit_smooth(const std::vector<ParameterPoint>& thetas) {
  std::vector<rom::LatentCoefficients> c;
  for (const auto& th : thetas) c.push_back(smooth_coefficients(th));
  return gp::fit_gp(thetas, c);
}

// 1-D data along nu at fixed omega, L = 1: outputs (A, b).
gp::GPSurrogate fit_line(const std::vector<double>& nus, const std::function<double(double)>& f) {
  std::vector<ParameterPoint> th;
  std::vector<rom::LatentCoefficients> c;
  for (double x : nus) {
    th.push_back({x, 1.0});
    auto k = rom::LatentCoefficients::zeros(1);
    k.A(0, 0) = f(x);
    k.b(0) = -f(x);
    c.push_back(k);
  }
  return gp::fit_gp(th, c);
}

}  // namespace

TEST_CASE("likelihood gradient matches finite differences") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd x = lasdi::testing::random_matrix(7, 2, rng);
  Eigen::VectorXd y(7);
  for (int i = 0; i < 7; ++i) y(i) = std::sin(2.0 * x(i, 0)) + x(i, 1) * x(i, 1);
  y.array() -= y.mean();
  gp::KernelParams p;
  p.signal_variance = 0.7;
  p.lengthscales = Eigen::Vector2d(0.8, 1.3);
  p.jitter = 1e-8;
  const auto base = gp::log_marginal_likelihood(x, y, p);
  REQUIRE(base);
  Eigen::VectorXd logs(3);
  logs << std::log(p.signal_variance), std::log(p.lengthscales(0)), std::log(p.lengthscales(1));
  for (int k = 0; k < 3; ++k) {
    auto at = [&](double delta) {
      Eigen::VectorXd v = logs;
      v(k) += delta;
      gp::KernelParams q = p;
      q.signal_variance = std::exp(v(0));
      q.lengthscales = v.tail(2).array().exp();
      return gp::log_marginal_likelihood(x, y, q)->value;
    };
    const double h = 1e-5;
    const double fd = (at(h) - at(-h)) / (2 * h);
    CAPTURE(k);
    CHECK(std::abs(base->gradient(k) - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
  CHECK(gp::kernel(x.row(0).transpose(), x.row(0).transpose(), p) == p.signal_variance);
}

TEST_CASE("single training point") {
  const ParameterPoint th{0.1, 1.0};
  const auto s = gp::fit_gp(std::vector<ParameterPoint>{th}, {smooth_coefficients(th)});
  const auto expect = smooth_coefficients(th).flatten();
  for (const auto& q : {th, ParameterPoint{0.2, 0.6}}) {
    const auto post = s.posterior(q);
    CHECK((post.mean - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(post.variance.minCoeff() >= 0.0);
  }
}

TEST_CASE("interpolates training data") {
  const auto thetas = scattered_thetas(8, 5);
  const auto s = fit_smooth(thetas);
  CHECK(s.num_points() == 8);
  CHECK(s.num_outputs() == 6);
  for (const auto& th : thetas) {
    const auto post = s.posterior(th);
    CHECK((post.mean - smooth_coefficients(th).flatten()).cwiseAbs().maxCoeff() < 1e-6);
    for (Eigen::Index o = 0; o < post.variance.size(); ++o)
      CHECK(post.variance(o) < 1e-8 * std::max(1.0, s.params[o].signal_variance));
    const auto c = s.mean_coefficients(th);
    CHECK((c.A - smooth_coefficients(th).A).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("posterior does not depend on training order") {
  auto thetas = scattered_thetas(6, 8);
  const auto a = fit_smooth(thetas);
  std::reverse(thetas.begin(), thetas.end());
  std::swap(thetas[1], thetas[4]);
  const auto b = fit_smooth(thetas);
  for (const auto& q : {ParameterPoint{0.12, 0.9}, ParameterPoint{0.24, 0.55}}) {
    const auto pa = a.posterior(q), pb = b.posterior(q);
    CHECK((pa.mean - pb.mean).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((pa.variance - pb.variance).cwiseAbs().maxCoeff() <
          1e-6 * std::max(1.0, pa.variance.maxCoeff()));
  }
}

TEST_CASE("one-dimensional smooth target between knots") {
  const auto f = [](double x) { return std::sin(std::numbers::pi * x); };
  const auto s = fit_line({0.0, 0.25, 0.5, 0.75, 1.0}, f);
  for (double m : {0.125, 0.375, 0.625, 0.875}) {
    CAPTURE(m);
    const auto mean = s.posterior({m, 1.0}).mean;
    CHECK(std::abs(mean(0) - f(m)) < 0.1 * std::abs(f(m)));
    CHECK(std::abs(mean(1) + f(m)) < 0.1 * std::abs(f(m)));
  }
}

TEST_CASE("variance far from data approaches the signal variance") {
  const auto s = fit_smooth(scattered_thetas(6, 2));
  const auto post = s.posterior({50.0, -40.0});
  for (Eigen::Index o = 0; o < post.variance.size(); ++o) {
    const double sv = s.params[o].signal_variance;
    CHECK(std::abs(post.variance(o) - sv) <= 1e-3 * sv);
    CHECK(std::abs(post.mean(o) - s.target_mean(o)) <= 1e-3 * std::max(1.0, std::sqrt(sv)));
  }
}

TEST_CASE("midpoint of two symmetric points is their average") {
  std::vector<ParameterPoint> th{{0.1, 1.0}, {0.2, 1.0}};
  std::vector<rom::LatentCoefficients> c{smooth_coefficients(th[0]), smooth_coefficients(th[1])};
  const auto s = gp::fit_gp(th, c);
  const Eigen::VectorXd avg = 0.5 * (c[0].flatten() + c[1].flatten());
  CHECK((s.posterior({0.15, 1.0}).mean - avg).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit preconditions") {
  const ParameterPoint th{0.1, 1.0};
  CHECK_THROWS_AS(gp::fit_gp(std::vector<ParameterPoint>{th, th},
                             {smooth_coefficients(th), smooth_coefficients(th)}),
                  DomainError);
  CHECK_THROWS_AS(gp::fit_gp(std::vector<ParameterPoint>{}, {}), DomainError);
  CHECK_THROWS_AS(gp::fit_gp(gp::theta_matrix({th}), Eigen::MatrixXd::Zero(1, 5), 2), DimensionError);
}

TEST_CASE("posterior sampling") {
  const auto thetas = scattered_thetas(6, 4);
  const auto s = fit_smooth(thetas);
  std::mt19937_64 rng(1);

  SUBCASE("at a training point the samples collapse to the mean") {
    const auto mean = s.posterior(thetas[2]).mean;
    for (const auto& c : gp::sample_posterior(s, thetas[2], 10, rng))
      CHECK((c.flatten() - mean).cwiseAbs().maxCoeff() < 1e-3);
  }
  SUBCASE("Monte Carlo moments") {
    const ParameterPoint q{0.2, 0.7};
    const auto post = s.posterior(q);
    const int n = 10000;
    const auto samples = gp::sample_posterior(s, q, n, rng);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(post.mean.size()), sq = sum;
    for (const auto& c : samples) {
      const Eigen::VectorXd f = c.flatten();
      sum += f;
      sq += f.cwiseProduct(f);
    }
    const Eigen::VectorXd mean = sum / n;
    const Eigen::VectorXd var = sq / n - mean.cwiseProduct(mean);
    for (Eigen::Index o = 0; o < mean.size(); ++o) {
      CAPTURE(o);
      const double se = std::sqrt(post.variance(o) / n);
      CHECK(std::abs(mean(o) - post.mean(o)) <= 3.0 * se + 1e-12);
      CHECK(std::abs(var(o) - post.variance(o)) <= 0.05 * post.variance(o) + 1e-14);
    }
  }
  SUBCASE("deterministic for a fixed seed") {
    std::mt19937_64 a(7), b(7);
    const auto x = gp::sample_posterior(s, {0.1, 1.3}, 5, a);
    const auto y = gp::sample_posterior(s, {0.1, 1.3}, 5, b);
    for (int k = 0; k < 5; ++k) CHECK(x[k].flatten() == y[k].flatten());
    CHECK_THROWS_AS(gp::sample_posterior(s, {0.1, 1.3}, 0, a), DomainError);
  }
}

namespace {

// Training points along nu at omega = 1; identity autoencoder so decoded
// variance equals latent variance.
struct GreedyFixture {
  gp::GPSurrogate s;
  rom::AutoencoderModel model = lasdi::testing::identity_autoencoder(2);
  gp::GreedySettings settings;

  explicit GreedyFixture(const std::vector<double>& nus) {
    std::vector<ParameterPoint> th;
    std::vector<rom::LatentCoefficients> c;
    for (double x : nus) {
      th.push_back({x, 1.0});
      c.push_back(smooth_coefficients({x, 1.0}));
    }
    s = gp::fit_gp(th, c);
    settings.times = Eigen::VectorXd::LinSpaced(11, 0.0, 1.0);
    settings.n_samples = 20;
  }

  gp::Candidate candidate(double nu) const { return {{nu, 1.0}, Eigen::Vector2d(1.0, -0.5)}; }
};

}  // namespace

TEST_CASE("greedy selection") {
  GreedyFixture fx({0.0, 0.1, 0.2, 1.0});
  std::mt19937_64 rng(2);

  CHECK(gp::greedy_select(fx.s, fx.model, {fx.candidate(0.05)}, fx.settings, rng)->nu == 0.05);
  CHECK(!gp::greedy_select(fx.s, fx.model, {}, fx.settings, rng));

  // The widest gap in the training set dominates.
  const std::vector<gp::Candidate> pool{fx.candidate(0.05), fx.candidate(0.15), fx.candidate(0.6)};
  CHECK(gp::greedy_select(fx.s, fx.model, pool, fx.settings, rng)->nu == 0.6);

  // A candidate already in the training set has (near) zero variance.
  const std::vector<gp::Candidate> with_known{fx.candidate(0.1), fx.candidate(0.15)};
  const auto r = gp::greedy_rank(fx.s, fx.model, with_known, fx.settings, rng);
  CHECK(r.order.front() == 1);
  CHECK(r.scores[0] < 1e-8);
  CHECK(r.scores[1] > 0.0);

  std::mt19937_64 a(11), b(11);
  const auto ra = gp::greedy_rank(fx.s, fx.model, pool, fx.settings, a);
  const auto rb = gp::greedy_rank(fx.s, fx.model, pool, fx.settings, b);
  CHECK(ra.scores == rb.scores);
  CHECK(ra.order == rb.order);
}

TEST_CASE("diverging samples score infinity") {
  auto c = rom::LatentCoefficients::zeros(2);
  c.A = 1e5 * Eigen::Matrix2d::Identity();
  const auto s = gp::fit_gp(std::vector<ParameterPoint>{{0.1, 1.0}}, {c});
  gp::GreedySettings settings;
  settings.times = Eigen::VectorXd::LinSpaced(101, 0.0, 100.0);
  std::mt19937_64 rng(1);
  const auto model = lasdi::testing::identity_autoencoder(2);
  const double v =
      gp::decoded_variance(s, model, {{0.15, 1.0}, Eigen::Vector2d(1.0, 1.0)}, settings, rng);
  CHECK(std::isinf(v));
}

TEST_CASE("interpolation holds for polynomial targets on grid subsets") {
  // Near-polynomial targets push the lengthscales to their bound, where the
  // kernel matrix is most ill-conditioned.
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> cell(0, 10);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const double a1 = coef(rng), a2 = coef(rng), a3 = coef(rng);
    std::vector<ParameterPoint> th;
    std::vector<rom::LatentCoefficients> c;
    while (th.size() < 3 + seed) {
      const ParameterPoint p{0.05 + 0.02 * cell(rng), 0.5 + 0.1 * cell(rng)};
      if (std::find(th.begin(), th.end(), p) != th.end()) continue;
      th.push_back(p);
      auto k = rom::LatentCoefficients::zeros(2);
      k.A << a1 * p.nu, a2 * p.omega, a1 * p.nu + a3 * p.omega, 3.0 * p.nu * p.omega;
      k.b << 100.0 * p.nu * p.nu, -p.omega;
      c.push_back(k);
    }
    const auto s = gp::fit_gp(th, c);
    for (std::size_t i = 0; i < th.size(); ++i) {
      CAPTURE(seed);
      CAPTURE(i);
      const auto post = s.posterior(th[i]);
      CHECK((post.mean - c[i].flatten()).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(post.variance.maxCoeff() < 1e-8);
    }
  }
}
