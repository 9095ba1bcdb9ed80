#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace triage {

template <typename Scalar>
inline constexpr Scalar kNaN = std::numeric_limits<Scalar>::quiet_NaN();

/// Median of a dense vector expression; NaN for empty input.
template <typename Derived>
typename Derived::Scalar median(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  if (n == 0) return kNaN<Scalar>;
  std::vector<Scalar> buf(v.derived().data(), v.derived().data() + n);
  const auto mid = buf.begin() + n / 2;
  std::nth_element(buf.begin(), mid, buf.end());
  if (n % 2 == 1) return *mid;
  const Scalar upper = *mid;
  const Scalar lower = *std::max_element(buf.begin(), mid);
  return (lower + upper) / Scalar(2);
}

template <typename Scalar>
Scalar median(std::vector<Scalar> buf) {
  if (buf.empty()) return kNaN<Scalar>;
  const std::size_t n = buf.size();
  const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(buf.begin(), mid, buf.end());
  if (n % 2 == 1) return *mid;
  const Scalar upper = *mid;
  const Scalar lower = *std::max_element(buf.begin(), mid);
  return (lower + upper) / Scalar(2);
}

/// Sample (n - 1) variance. Zero for fewer than two values.
template <typename Derived>
typename Derived::Scalar sample_variance(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  if (n < 2) return Scalar(0);
  const Scalar mu = v.mean();
  return (v.derived().array() - mu).square().sum() / Scalar(n - 1);
}

template <typename Derived>
typename Derived::Scalar sample_std(const Eigen::DenseBase<Derived>& v) {
  return std::sqrt(sample_variance(v));
}

/// Least-squares slope of y against x.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar ls_slope(const Eigen::DenseBase<DerivedX>& x,
                                   const Eigen::DenseBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  const Scalar mx = x.mean();
  const Scalar my = y.mean();
  const auto dx = (x.derived().array() - mx);
  const Scalar sxx = dx.square().sum();
  if (sxx <= Scalar(0)) return kNaN<Scalar>;
  return (dx * (y.derived().array() - my)).sum() / sxx;
}

/// Median / mean / sample std / max summary used by the morphology tables.
template <typename Scalar>
struct Summary {
  Scalar med = kNaN<Scalar>;
  Scalar mean = kNaN<Scalar>;
  Scalar std = kNaN<Scalar>;
  Scalar max = kNaN<Scalar>;
};

template <typename Scalar>
Summary<Scalar> summarize(const std::vector<Scalar>& values) {
  Summary<Scalar> s;
  if (values.empty()) return s;
  const Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> v(values.data(),
                                                                      static_cast<Eigen::Index>(values.size()));
  s.med = median(v);
  s.mean = v.mean();
  s.std = sample_std(v);
  s.max = v.maxCoeff();
  return s;
}

}  // namespace triage
