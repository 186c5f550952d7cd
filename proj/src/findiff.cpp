#include "lasdi/findiff.hpp"

namespace lasdi::findiff {

SeriesStencil SeriesStencil::build(const Eigen::Ref<const Eigen::VectorXd>& times) {
  const Eigen::Index n = times.size();
  if (n < 3) throw DomainError("differentiate_series: need at least 3 samples");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(times(i) > times(i - 1)))
      throw DomainError("differentiate_series: times must be strictly increasing (index " +
                        std::to_string(i) + ")");

  SeriesStencil s;
  s.first.resize(n);
  s.weights.resize(n, 3);

  const auto head = onesided_weights(Side::right, times(1) - times(0), times(2) - times(1));
  s.first(0) = 0;
  s.weights.row(0) << head.weights[0], head.weights[1], head.weights[2];

  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const auto c = central_weights(times(i) - times(i - 1), times(i + 1) - times(i));
    s.first(i) = static_cast<int>(i - 1);
    s.weights.row(i) << c.weights[0], c.weights[1], c.weights[2];
  }

  const auto tail =
      onesided_weights(Side::left, times(n - 1) - times(n - 2), times(n - 2) - times(n - 3));
  s.first(n - 1) = static_cast<int>(n - 3);
  s.weights.row(n - 1) << tail.weights[0], tail.weights[1], tail.weights[2];
  return s;
}

ad::Matrix SeriesStencil::apply_transpose(const ad::Matrix& g) const {
  ad::Matrix out = ad::Matrix::Zero(g.rows(), g.cols());
  for (Eigen::Index i = 0; i < size(); ++i) {
    const int f = first(i);
    for (int k = 0; k < 3; ++k) out.row(f + k) += weights(i, k) * g.row(i);
  }
  return out;
}

ad::Tensor differentiate_series(const SeriesStencil& stencil, const ad::Tensor& values) {
  ad::Matrix out = stencil.apply(values.value());
  return values.tape()->record(std::move(out), {values},
                               [values, stencil](ad::Tape& t, const ad::Matrix& g) {
                                 t.accumulate(values, stencil.apply_transpose(g));
                               });
}

ad::Tensor differentiate_series(const Eigen::Ref<const Eigen::VectorXd>& times,
                                const ad::Tensor& values) {
  return differentiate_series(SeriesStencil::build(times), values);
}

}  // namespace lasdi::findiff
