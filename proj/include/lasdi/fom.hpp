#pragma once

// Periodic 2D viscous Burgers solver and output time-grid generation.
//
// The grid has n_x * n_y nodes spaced dx = (x_max - x_min) / (n_x - 1). The
// periodic closure treats the node after the last one as the first one, so
// every node is an independent unknown and the discrete period is n_x * dx.
// States are stored x-fastest: node (ix, iy) lives at iy * n_x + ix.

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "lasdi/gradtape.hpp"

namespace lasdi::fom {

using State = Eigen::VectorXd;
using Frames = ad::Matrix;  // one state per row

struct Grid2D {
  double x_min = -2.0, x_max = 2.0;
  double y_min = -2.0, y_max = 2.0;
  int n_x = 51, n_y = 51;

  double dx() const { return (x_max - x_min) / (n_x - 1); }
  double dy() const { return (y_max - y_min) / (n_y - 1); }
  Eigen::Index num_nodes() const { return static_cast<Eigen::Index>(n_x) * n_y; }
  double x(int ix) const { return x_min + ix * dx(); }
  double y(int iy) const { return y_min + iy * dy(); }
  void validate() const;
};

struct ParameterPoint {
  double nu = 0.1;
  double omega = 1.0;

  bool operator==(const ParameterPoint&) const = default;
};

enum class TimeMode { fixed, variable };

std::string to_string(TimeMode mode);
TimeMode time_mode_from_string(const std::string& s);

struct FOMConfig {
  Grid2D grid;
  double final_time = 2.0;
  int n_t = 500;  // number of steps; n_t + 1 frames including t = 0
  double k = 1.0;
  double cfl_safety = 0.5;
  TimeMode time_mode = TimeMode::fixed;
  double jitter = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Trajectory {
  ParameterPoint theta;
  Eigen::VectorXd times;
  Frames states;

  Eigen::Index num_frames() const { return times.size(); }
  Eigen::Index num_nodes() const { return states.cols(); }
  double mean_step() const {
    return (times(times.size() - 1) - times(0)) / static_cast<double>(times.size() - 1);
  }
};

State initial_condition(const ParameterPoint& theta, const Grid2D& grid, double k);

/// Which terms burgers_rhs evaluates; tests isolate the diffusion part.
struct RhsTerms {
  bool advection = true;
  bool diffusion = true;
};

/// -1/2 d(u^2)/dx - 1/2 d(u^2)/dy + nu * laplacian(u), central differences
/// with periodic wraparound.
State burgers_rhs(const State& u, const ParameterPoint& theta, const Grid2D& grid,
                  RhsTerms terms = {});

/// Stable internal step bound cfl_safety * min(h / max|u|, h^2 / (4 nu)).
double stable_step(const State& u, const ParameterPoint& theta, const Grid2D& grid,
                   double cfl_safety);

Eigen::VectorXd make_time_grid(int n_t, double final_time, TimeMode mode, double jitter,
                               std::uint64_t seed);

/// RK4 with substeps shortened to land on every output time. Throws
/// NumericalError on non-finite states.
Trajectory solve_fom(const FOMConfig& config, const ParameterPoint& theta,
                     const Eigen::VectorXd& times);
Trajectory solve_fom(const FOMConfig& config, const ParameterPoint& theta);

}  // namespace lasdi::fom
