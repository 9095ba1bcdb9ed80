#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace triage {

/// Second-order section, a0 normalised to 1.
template <typename Scalar>
struct Biquad {
  Scalar b0, b1, b2, a1, a2;
};

template <typename Scalar>
using SosCascade = std::vector<Biquad<Scalar>>;

/// Digital Butterworth band-pass of the given prototype order (the cascade has
/// `order` sections, 2*order poles), designed through the bilinear transform
/// with pre-warped band edges and normalised to unit gain at the geometric
/// centre frequency.
template <typename Scalar = double>
SosCascade<Scalar> butterworth_bandpass(int order, double f_lo, double f_hi, double fs) {
  using cplx = std::complex<double>;
  const double two_fs = 2.0 * fs;
  const double w_lo = two_fs * std::tan(std::numbers::pi * f_lo / fs);
  const double w_hi = two_fs * std::tan(std::numbers::pi * f_hi / fs);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  std::vector<cplx> poles;
  for (int k = 1; k <= order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order - 1) / (2.0 * order);
    const cplx proto = std::polar(1.0, theta);
    // Low-pass -> band-pass: s^2 - p*bw*s + w0^2 = 0.
    const cplx pb = proto * bw;
    const cplx disc = std::sqrt(pb * pb - 4.0 * w0_sq);
    for (const cplx sa : {(pb + disc) / 2.0, (pb - disc) / 2.0}) poles.push_back((two_fs + sa) / (two_fs - sa));
  }

  // Pair conjugates; leftover real poles pair with each other.
  std::vector<cplx> upper, reals;
  constexpr double eps = 1e-12;
  for (const auto& p : poles) {
    if (p.imag() > eps) upper.push_back(p);
    else if (std::abs(p.imag()) <= eps) reals.emplace_back(p.real(), 0.0);
  }
  std::sort(reals.begin(), reals.end(), [](cplx a, cplx b) { return a.real() < b.real(); });

  SosCascade<Scalar> sos;
  const auto push = [&](double a1, double a2) {
    sos.push_back({Scalar(1), Scalar(0), Scalar(-1), static_cast<Scalar>(a1), static_cast<Scalar>(a2)});
  };
  for (const auto& p : upper) push(-2.0 * p.real(), std::norm(p));
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
    push(-(reals[i].real() + reals[i + 1].real()), reals[i].real() * reals[i + 1].real());

  // Normalise: each section carries zeros at z = +1 and z = -1.
  const double omega = 2.0 * std::atan(std::sqrt(w0_sq) / two_fs);
  const cplx z = std::polar(1.0, omega);
  cplx h = 1.0;
  for (const auto& s : sos) {
    const cplx zi = 1.0 / z;
    h *= (cplx(s.b0) + cplx(s.b1) * zi + cplx(s.b2) * zi * zi) / (1.0 + cplx(s.a1) * zi + cplx(s.a2) * zi * zi);
  }
  const double g = std::pow(1.0 / std::abs(h), 1.0 / static_cast<double>(sos.size()));
  for (auto& s : sos) {
    s.b0 *= static_cast<Scalar>(g);
    s.b1 *= static_cast<Scalar>(g);
    s.b2 *= static_cast<Scalar>(g);
  }
  return sos;
}

/// In-place direct-form-II-transposed cascade with zero initial state.
template <typename Scalar>
void sos_filter_inplace(const SosCascade<Scalar>& sos, Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> x) {
  for (const auto& s : sos) {
    Scalar z1 = 0, z2 = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const Scalar in = x[i];
      const Scalar out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      x[i] = out;
    }
  }
}

/// Forward-backward application after odd reflection padding of `pad` samples
/// at each end. The result has zero phase and the input length.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> filtfilt(
    const SosCascade<typename Derived::Scalar>& sos, const Eigen::MatrixBase<Derived>& x, Eigen::Index pad) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = x.size();
  if (n == 0) return Vec();
  pad = std::clamp<Eigen::Index>(pad, 0, n - 1);
  Vec ext(n + 2 * pad);
  const Scalar first = x[0];
  const Scalar last = x[n - 1];
  for (Eigen::Index i = 0; i < pad; ++i) {
    ext[pad - 1 - i] = Scalar(2) * first - x[i + 1];
    ext[pad + n + i] = Scalar(2) * last - x[n - 2 - i];
  }
  ext.segment(pad, n) = x;
  sos_filter_inplace<Scalar>(sos, ext);
  ext.reverseInPlace();
  sos_filter_inplace<Scalar>(sos, ext);
  ext.reverseInPlace();
  return ext.segment(pad, n);
}

}  // namespace triage
