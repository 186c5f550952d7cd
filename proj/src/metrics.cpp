#include "lasdi/metrics.hpp"

#include <cmath>

#include "lasdi/errors.hpp"

namespace lasdi::metrics {

ErrorReport relative_error(const fom::Frames& reference, const fom::Frames& prediction) {
  if (reference.rows() != prediction.rows() || reference.cols() != prediction.cols())
    throw DimensionError("relative_error: trajectories differ in shape");
  if (reference.size() == 0) throw DomainError("relative_error: empty trajectory");

  const auto mag = reference.array().abs();
  const double mean = mag.mean();
  const double sigma = std::sqrt((mag - mean).square().mean());
  if (!(sigma > 0.0))
    throw DomainError("relative_error: reference has zero spread (identically zero field?)");

  ErrorReport r;
  r.sigma = sigma;
  r.frame_mae = (reference - prediction).cwiseAbs().rowwise().mean();
  r.error = r.frame_mae.maxCoeff() / sigma;
  return r;
}

ErrorReport relative_error(const fom::Trajectory& reference, const fom::Trajectory& prediction) {
  if (reference.times.size() != prediction.times.size() ||
      (reference.times - prediction.times).cwiseAbs().maxCoeff() > 0.0)
    throw DimensionError("relative_error: time grids differ");
  ErrorReport r = relative_error(reference.states, prediction.states);
  r.theta = reference.theta;
  return r;
}

}  // namespace lasdi::metrics
