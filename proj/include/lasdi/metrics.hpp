#pragma once

#include <Eigen/Dense>

#include "lasdi/fom.hpp"

namespace lasdi::metrics {

/// error = max over frames of mean_i |u - u_hat| / sigma, where sigma is the
/// population standard deviation of |u| over every entry of the reference.
struct ErrorReport {
  fom::ParameterPoint theta;
  double error = 0.0;
  Eigen::VectorXd frame_mae;
  double sigma = 0.0;
};

ErrorReport relative_error(const fom::Frames& reference, const fom::Frames& prediction);
ErrorReport relative_error(const fom::Trajectory& reference, const fom::Trajectory& prediction);

}  // namespace lasdi::metrics
