#include "lasdi/fom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "lasdi/errors.hpp"

namespace lasdi::fom {

void Grid2D::validate() const {
  if (n_x < 3 || n_y < 3) throw ConfigError("grid needs at least 3 nodes per dimension");
  if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigError("grid extent must be positive");
}

std::string to_string(TimeMode mode) { return mode == TimeMode::fixed ? "fixed" : "variable"; }

TimeMode time_mode_from_string(const std::string& s) {
  if (s == "fixed") return TimeMode::fixed;
  if (s == "variable") return TimeMode::variable;
  throw ConfigError("unknown time mode '" + s + "' (expected fixed or variable)");
}

void FOMConfig::validate() const {
  grid.validate();
  if (n_t < 3) throw ConfigError("n_t must be at least 3");
  if (!(final_time > 0.0)) throw ConfigError("final time must be positive");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ConfigError("cfl_safety must be in (0, 1]");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("jitter must be in [0, 1)");
}

State initial_condition(const ParameterPoint& theta, const Grid2D& grid, double k) {
  State u(grid.num_nodes());
  const double f = std::numbers::pi / 2.0 * theta.omega;
  for (int iy = 0; iy < grid.n_y; ++iy) {
    const double y = grid.y(iy);
    for (int ix = 0; ix < grid.n_x; ++ix) {
      const double x = grid.x(ix);
      u(iy * grid.n_x + ix) = std::exp(-k * (x * x + y * y)) * std::sin(f * x) * std::sin(f * y);
    }
  }
  return u;
}

State burgers_rhs(const State& u, const ParameterPoint& theta, const Grid2D& grid,
                  RhsTerms terms) {
  const int nx = grid.n_x, ny = grid.n_y;
  if (u.size() != grid.num_nodes()) throw DimensionError("burgers_rhs: state size mismatch");
  const double dx = grid.dx(), dy = grid.dy();
  const double ax = 1.0 / (4.0 * dx), ay = 1.0 / (4.0 * dy);
  const double lx = theta.nu / (dx * dx), ly = theta.nu / (dy * dy);

  State rhs(u.size());
  for (int iy = 0; iy < ny; ++iy) {
    const int ym = (iy + ny - 1) % ny, yp = (iy + 1) % ny;
    for (int ix = 0; ix < nx; ++ix) {
      const int xm = (ix + nx - 1) % nx, xp = (ix + 1) % nx;
      const double c = u(iy * nx + ix);
      const double w = u(iy * nx + xm), e = u(iy * nx + xp);
      const double s = u(ym * nx + ix), n = u(yp * nx + ix);
      double r = 0.0;
      if (terms.advection) r -= ax * (e * e - w * w) + ay * (n * n - s * s);
      if (terms.diffusion) r += lx * (e - 2.0 * c + w) + ly * (n - 2.0 * c + s);
      rhs(iy * nx + ix) = r;
    }
  }
  return rhs;
}

double stable_step(const State& u, const ParameterPoint& theta, const Grid2D& grid,
                   double cfl_safety) {
  const double h = std::min(grid.dx(), grid.dy());
  double limit = std::numeric_limits<double>::infinity();
  const double umax = u.cwiseAbs().maxCoeff();
  if (umax > 0.0) limit = h / umax;
  if (theta.nu > 0.0) limit = std::min(limit, h * h / (4.0 * theta.nu));
  return cfl_safety * limit;
}

Eigen::VectorXd make_time_grid(int n_t, double final_time, TimeMode mode, double jitter,
                               std::uint64_t seed) {
  if (n_t < 3) throw DomainError("make_time_grid: n_t must be at least 3");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw DomainError("make_time_grid: jitter must be in [0, 1)");
  if (!(final_time > 0.0)) throw DomainError("make_time_grid: final time must be positive");

  Eigen::VectorXd times(n_t + 1);
  if (mode == TimeMode::fixed) {
    for (int j = 0; j <= n_t; ++j) times(j) = final_time * j / n_t;
    return times;
  }
  std::mt19937_64 rng(seed);
  const double mean = final_time / n_t;
  std::uniform_real_distribution<double> step((1.0 - jitter) * mean, (1.0 + jitter) * mean);
  Eigen::VectorXd steps(n_t);
  for (int j = 0; j < n_t; ++j) steps(j) = step(rng);
  steps *= final_time / steps.sum();
  times(0) = 0.0;
  for (int j = 0; j < n_t; ++j) times(j + 1) = times(j) + steps(j);
  times(n_t) = final_time;
  return times;
}

namespace {

void check_finite(const State& u, double t, int output_step) {
  if (!u.allFinite())
    throw NumericalError("solve_fom: non-finite state at t = " + std::to_string(t) +
                         " while advancing to output step " + std::to_string(output_step) +
                         " (CFL limit violated?)");
}

}  // namespace

Trajectory solve_fom(const FOMConfig& config, const ParameterPoint& theta,
                     const Eigen::VectorXd& times) {
  config.validate();
  if (!(theta.nu > 0.0)) throw DomainError("solve_fom: viscosity must be positive");
  if (times.size() < 2 || times(0) != 0.0) throw DomainError("solve_fom: times must start at 0");

  const Grid2D& grid = config.grid;
  Trajectory traj;
  traj.theta = theta;
  traj.times = times;
  traj.states.resize(times.size(), grid.num_nodes());

  State u = initial_condition(theta, grid, config.k);
  traj.states.row(0) = u.transpose();

  for (Eigen::Index j = 1; j < times.size(); ++j) {
    const double gap = times(j) - times(j - 1);
    if (!(gap > 0.0)) throw DomainError("solve_fom: times must be strictly increasing");
    const double limit = stable_step(u, theta, grid, config.cfl_safety);
    const long nsub = std::max(1L, static_cast<long>(std::ceil(gap / limit)));
    const double h = gap / static_cast<double>(nsub);
    for (long s = 0; s < nsub; ++s) {
      const State k1 = burgers_rhs(u, theta, grid);
      const State k2 = burgers_rhs(u + 0.5 * h * k1, theta, grid);
      const State k3 = burgers_rhs(u + 0.5 * h * k2, theta, grid);
      const State k4 = burgers_rhs(u + h * k3, theta, grid);
      u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    check_finite(u, times(j), static_cast<int>(j));
    traj.states.row(j) = u.transpose();
  }
  return traj;
}

Trajectory solve_fom(const FOMConfig& config, const ParameterPoint& theta) {
  const Eigen::VectorXd times =
      make_time_grid(config.n_t, config.final_time, config.time_mode, config.jitter, config.seed);
  return solve_fom(config, theta, times);
}

}  // namespace lasdi::fom
