#include "triage/hrv.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "triage/errors.hpp"
#include "triage/stats.hpp"

namespace triage {

const std::array<std::string_view, HrvVector::kSize> HrvVector::kNames = {
    "bSQI",     "Alpha 1", "Alpha 2", "AVNN",    "BETA",   "HF norm", "HF peak", "HF power", "IALS",
    "LF norm",  "LF peak", "LF power", "LF to HF", "PAS",    "PIP",     "pNN50",   "PSS",      "RMSSD",
    "SampEn",   "SD1",     "SD2",     "SDNN",    "SEM",    "Total power", "VLF norm", "VLF power"};

void HrvVector::merge(const HrvVector& other) {
  for (std::size_t i = 0; i < kSize; ++i)
    if (!std::isnan(other.values[i])) values[i] = other.values[i];
}

namespace {

Eigen::Map<const Eigen::VectorXd> as_vec(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

}  // namespace

HrvVector hrv_time_domain(std::span<const double> nn_ms) {
  if (nn_ms.size() < 2) throw InsufficientDataError("time-domain HRV needs at least 2 intervals");
  const auto nn = as_vec(nn_ms);
  const Eigen::Index n = nn.size();
  const Eigen::ArrayXd d = (nn.tail(n - 1) - nn.head(n - 1)).array();

  HrvVector out;
  out[Hrv::AVNN] = nn.mean();
  out[Hrv::SDNN] = sample_std(nn);
  out[Hrv::SEM] = out[Hrv::SDNN] / std::sqrt(static_cast<double>(n));
  out[Hrv::RMSSD] = std::sqrt(d.square().mean());
  out[Hrv::pNN50] = 100.0 * static_cast<double>((d.abs() > 50.0).count()) / static_cast<double>(d.size());
  return out;
}

HrvVector hrv_fragmentation(std::span<const double> nn_ms) {
  if (nn_ms.size() < 4) throw InsufficientDataError("fragmentation needs at least 4 intervals");
  const std::size_t m = nn_ms.size() - 1;
  // Segment lengths: maximal runs of increments with a strictly positive
  // product between neighbours.
  std::vector<int> seg;
  int run = 1;
  double prev = nn_ms[1] - nn_ms[0];
  for (std::size_t i = 1; i < m; ++i) {
    const double cur = nn_ms[i + 1] - nn_ms[i];
    if (prev * cur > 0.0) {
      ++run;
    } else {
      seg.push_back(run);
      run = 1;
    }
    prev = cur;
  }
  seg.push_back(run);

  const double dm = static_cast<double>(m);
  double short_len = 0.0;
  double alternating = 0.0;
  int ones = 0;
  for (std::size_t k = 0; k <= seg.size(); ++k) {
    const bool one = k < seg.size() && seg[k] == 1;
    if (one) {
      ++ones;
    } else {
      if (ones >= 4) alternating += ones;
      ones = 0;
    }
    if (k < seg.size() && seg[k] < 3) short_len += seg[k];
  }

  HrvVector out;
  out[Hrv::PIP] = 100.0 * static_cast<double>(seg.size() - 1) / dm;
  out[Hrv::IALS] = static_cast<double>(seg.size()) / dm;
  out[Hrv::PSS] = 100.0 * short_len / dm;
  out[Hrv::PAS] = 100.0 * alternating / dm;
  return out;
}

Eigen::VectorXd lomb_scargle(std::span<const double> nn_ms, std::span<const double> t_s, double step,
                             Eigen::Index count) {
  if (nn_ms.size() != t_s.size()) throw ParameterError("lomb_scargle: length mismatch");
  const auto n = static_cast<Eigen::Index>(nn_ms.size());
  Eigen::VectorXd psd = Eigen::VectorXd::Zero(count);
  if (n < 2) return psd;
  const Eigen::ArrayXd x = as_vec(nn_ms).array() - as_vec(nn_ms).mean();
  // Times relative to the first sample keep the phase recurrence well conditioned.
  const Eigen::ArrayXd t = as_vec(t_s).array() - t_s.front();
  const double duration = t_s.back() - t_s.front();
  const double dw = 2.0 * std::numbers::pi * step;

  using C = std::complex<double>;
  std::vector<C> e(static_cast<std::size_t>(n)), rot(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) rot[i] = std::polar(1.0, dw * t[i]);
  constexpr Eigen::Index kRefresh = 64;

  for (Eigen::Index k = 0; k < count; ++k) {
    const double w = dw * static_cast<double>(k + 1);
    if (k % kRefresh == 0) {
      for (Eigen::Index i = 0; i < n; ++i) e[i] = std::polar(1.0, w * t[i]);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) e[i] *= rot[i];
    }
    C s1{0.0, 0.0}, s2{0.0, 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
      s1 += x[i] * e[i];
      s2 += e[i] * e[i];
    }
    // 2*w*tau = arg(s2); rotate both sums by -w*tau.
    const double two_wtau = std::arg(s2);
    const C r1 = s1 * std::polar(1.0, -0.5 * two_wtau);
    const double c2 = std::abs(s2);  // Re(s2 * exp(-i * 2 w tau))
    const double cc = 0.5 * (static_cast<double>(n) + c2);
    const double ss = 0.5 * (static_cast<double>(n) - c2);
    double p = 0.0;
    if (cc > 0.0) p += r1.real() * r1.real() / cc;
    if (ss > 1e-12 * static_cast<double>(n)) p += r1.imag() * r1.imag() / ss;
    psd[k] = duration * p / static_cast<double>(n);
  }
  return psd;
}

HrvVector hrv_spectral(std::span<const double> nn_ms, std::span<const double> t_s, const SpectralConfig& cfg) {
  if (nn_ms.size() != t_s.size()) throw ParameterError("hrv_spectral: length mismatch");
  if (nn_ms.size() < 4) throw InsufficientDataError("spectral HRV needs at least 4 intervals");
  const double duration = t_s.back() - t_s.front();
  if (!(duration > 0.0)) throw InsufficientDataError("spectral HRV needs a positive time span");

  const double step = 1.0 / (cfg.oversampling * duration);
  const auto count = static_cast<Eigen::Index>(std::floor(cfg.hf_hi / step + 1e-9));
  HrvVector out;
  if (count < 1) return out;
  const Eigen::VectorXd psd = lomb_scargle(nn_ms, t_s, step, count);
  const auto freq = [&](Eigen::Index k) { return step * static_cast<double>(k + 1); };

  struct Band {
    double power = 0.0;
    double peak = kNaN<double>;
    double peak_val = -1.0;
  };
  const auto band = [&](double lo, double hi) {
    Band b;
    for (Eigen::Index k = 0; k < count; ++k) {
      const double f = freq(k);
      if (f < lo || f >= hi) continue;
      b.power += psd[k] * step;
      if (psd[k] > b.peak_val) {
        b.peak_val = psd[k];
        b.peak = f;
      }
    }
    return b;
  };

  const double total = psd.sum() * step;
  if (!(total > 0.0)) return out;
  const Band vlf = band(cfg.vlf_lo, cfg.lf_lo);
  const Band lf = band(cfg.lf_lo, cfg.hf_lo);
  const Band hf = band(cfg.hf_lo, cfg.hf_hi);
  const double rest = total - vlf.power;

  out[Hrv::TotalPower] = total;
  out[Hrv::LFpower] = lf.power;
  out[Hrv::HFpower] = hf.power;
  out[Hrv::LFpeak] = lf.peak;
  out[Hrv::HFpeak] = hf.peak;
  if (rest > 0.0) {
    out[Hrv::LFnorm] = 100.0 * lf.power / rest;
    out[Hrv::HFnorm] = 100.0 * hf.power / rest;
  }
  if (hf.power > 0.0) out[Hrv::LFtoHF] = lf.power / hf.power;

  if (duration >= cfg.min_vlf_duration_s) {
    out[Hrv::VLFpower] = vlf.power;
    out[Hrv::VLFnorm] = 100.0 * vlf.power / total;
    std::vector<double> lx, ly;
    for (Eigen::Index k = 0; k < count && freq(k) < cfg.lf_lo; ++k) {
      if (psd[k] <= 0.0) continue;
      lx.push_back(std::log10(freq(k)));
      ly.push_back(std::log10(psd[k]));
    }
    if (lx.size() >= 2) out[Hrv::BETA] = ls_slope(as_vec(lx), as_vec(ly));
  }
  return out;
}

double dfa_fluctuation(std::span<const double> nn_ms, int box) {
  const auto n = static_cast<Eigen::Index>(nn_ms.size());
  if (box < 2 || box > n) throw ParameterError("dfa_fluctuation: box size out of range");
  const auto nn = as_vec(nn_ms);
  Eigen::VectorXd y(n);
  std::partial_sum(nn_ms.begin(), nn_ms.end(), y.data());
  y -= Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n)) * nn.mean();

  const Eigen::Index boxes = n / box;
  const Eigen::VectorXd k = Eigen::VectorXd::LinSpaced(box, 0.0, box - 1.0);
  const Eigen::VectorXd kc = k.array() - k.mean();
  const double sxx = kc.squaredNorm();
  double sq = 0.0;
  for (Eigen::Index b = 0; b < boxes; ++b) {
    const auto seg = y.segment(b * box, box);
    const double ym = seg.mean();
    const double slope = kc.dot(seg) / sxx;
    sq += ((seg.array() - ym) - slope * kc.array()).square().sum();
  }
  return std::sqrt(sq / static_cast<double>(boxes * box));
}

double dfa_alpha(std::span<const double> nn_ms, int lo, int hi) {
  if (lo < 2 || hi <= lo) throw ParameterError("dfa_alpha: bad scale range");
  if (static_cast<int>(nn_ms.size()) < hi) throw InsufficientDataError("dfa_alpha: series shorter than largest scale");
  std::vector<double> lx, ly;
  for (int s = lo; s <= hi; ++s) {
    const double f = dfa_fluctuation(nn_ms, s);
    if (!(f > 0.0)) return kNaN<double>;
    lx.push_back(std::log10(static_cast<double>(s)));
    ly.push_back(std::log10(f));
  }
  return ls_slope(as_vec(lx), as_vec(ly));
}

double sample_entropy(std::span<const double> x, int m, double r) {
  if (m < 1) throw ParameterError("sample_entropy: m must be positive");
  if (!(r > 0.0) || x.size() < static_cast<std::size_t>(m) + 2) return kNaN<double>;
  const std::size_t count = x.size() - static_cast<std::size_t>(m);
  // Sort templates by first coordinate so each scan stops once the leading
  // value leaves the tolerance.
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  double matches_m = 0.0, matches_m1 = 0.0;
  for (std::size_t p = 0; p < count; ++p) {
    const std::size_t i = order[p];
    for (std::size_t q = p + 1; q < count; ++q) {
      const std::size_t j = order[q];
      if (x[j] - x[i] > r) break;
      bool close = true;
      for (int k = 1; k < m && close; ++k) close = std::abs(x[i + k] - x[j + k]) <= r;
      if (!close) continue;
      matches_m += 1.0;
      if (std::abs(x[i + m] - x[j + m]) <= r) matches_m1 += 1.0;
    }
  }
  if (matches_m == 0.0 || matches_m1 == 0.0) return kNaN<double>;
  return -std::log(matches_m1 / matches_m);
}

HrvVector hrv_nonlinear(std::span<const double> nn_ms, const NonlinearConfig& cfg) {
  HrvVector out;
  const auto n = static_cast<Eigen::Index>(nn_ms.size());
  if (n < 3) throw InsufficientDataError("nonlinear HRV needs at least 3 intervals");
  const auto nn = as_vec(nn_ms);
  const Eigen::VectorXd d = nn.tail(n - 1) - nn.head(n - 1);
  const double var_nn = sample_variance(nn);
  const double sd1_sq = sample_variance(d) / 2.0;
  out[Hrv::SD1] = std::sqrt(sd1_sq);
  out[Hrv::SD2] = std::sqrt(std::max(0.0, 2.0 * var_nn - sd1_sq));

  out[Hrv::SampEn] = sample_entropy(nn_ms, cfg.sampen_m, cfg.sampen_r * std::sqrt(var_nn));
  if (n >= cfg.alpha1_hi) out[Hrv::Alpha1] = dfa_alpha(nn_ms, cfg.alpha1_lo, cfg.alpha1_hi);
  if (n >= cfg.alpha2_hi) out[Hrv::Alpha2] = dfa_alpha(nn_ms, cfg.alpha2_lo, cfg.alpha2_hi);
  return out;
}

HrvVector compute_hrv(const NnSeries& nn, double bsqi_value, const HrvConfig& cfg) {
  HrvVector out;
  out[Hrv::bSQI] = bsqi_value;
  const std::span<const double> x(nn.nn_ms);
  const std::span<const double> t(nn.t_s);
  const auto attempt = [&](auto&& fn) {
    try {
      out.merge(fn());
    } catch (const InsufficientDataError&) {
      // fields stay NaN
    }
  };
  attempt([&] { return hrv_time_domain(x); });
  attempt([&] { return hrv_fragmentation(x); });
  attempt([&] { return hrv_spectral(x, t, cfg.spectral); });
  attempt([&] { return hrv_nonlinear(x, cfg.nonlinear); });
  return out;
}

}  // namespace triage
