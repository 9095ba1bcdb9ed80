#include "triage/delineate.hpp"

#include <algorithm>
#include <cmath>

#include "triage/errors.hpp"

namespace triage {

bool BeatFiducials::ordered() const {
  const std::optional<Eigen::Index> seq[] = {p_on, p_peak, p_off, qrs_on, r, qrs_off, t_on, t_peak, t_off};
  std::optional<Eigen::Index> last;
  for (const auto& v : seq) {
    if (!v) continue;
    if (last && *v < *last) return false;
    last = v;
  }
  return true;
}

namespace {

std::vector<double> convolve_taps(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<double> upsample(const std::vector<double>& taps, std::size_t factor) {
  std::vector<double> out((taps.size() - 1) * factor + 1, 0.0);
  for (std::size_t i = 0; i < taps.size(); ++i) out[i * factor] = taps[i];
  return out;
}

/// Equivalent FIR of the a-trous cascade at scale 2^k.
std::vector<double> detail_filter(int k) {
  const std::vector<double> h{0.125, 0.375, 0.375, 0.125};
  const std::vector<double> g{2.0, -2.0};
  std::vector<double> q{1.0};
  for (int j = 1; j < k; ++j) q = convolve_taps(q, upsample(h, std::size_t{1} << (j - 1)));
  q = convolve_taps(q, upsample(g, std::size_t{1} << (k - 1)));
  // The cascade has even length; a two-tap mean centres it on a sample.
  return convolve_taps(q, {0.5, 0.5});
}

struct Waves {
  const Eigen::VectorXd& w;

  double mag(Eigen::Index n) const { return std::abs(w[n]); }

  /// Interior modulus maxima in [lo, hi].
  std::vector<Eigen::Index> maxima(Eigen::Index lo, Eigen::Index hi) const {
    std::vector<Eigen::Index> out;
    lo = std::max<Eigen::Index>(lo, 1);
    hi = std::min<Eigen::Index>(hi, w.size() - 2);
    for (Eigen::Index n = lo; n <= hi; ++n)
      if (mag(n) >= mag(n - 1) && mag(n) > mag(n + 1) && mag(n) > 0.0) out.push_back(n);
    return out;
  }

  /// Walks from `from` in direction `step` until |w| drops to `frac` of |w[from]|
  /// or reaches a local minimum; never passes `limit`.
  Eigen::Index walk(Eigen::Index from, int step, double frac, Eigen::Index limit) const {
    const double level = frac * mag(from);
    Eigen::Index n = from;
    while (n != limit) {
      const Eigen::Index next = n + step;
      if (mag(next) <= level) return next;
      if (next != limit && mag(next) <= mag(next + step)) return next;
      n = next;
    }
    return n;
  }

  /// Sample closest to the sign change between a and b.
  std::optional<Eigen::Index> zero_cross(Eigen::Index a, Eigen::Index b) const {
    for (Eigen::Index n = a + 1; n <= b; ++n) {
      if ((w[n - 1] > 0.0) != (w[n] > 0.0) || w[n] == 0.0) return mag(n - 1) < mag(n) ? n - 1 : n;
    }
    return std::nullopt;
  }
};

struct WaveResult {
  Eigen::Index on, peak, off;
};

/// Monophasic or biphasic wave between lo and hi: the strongest modulus
/// maximum plus its strongest opposite-sign neighbour.
std::optional<WaveResult> find_wave(const Waves& wv, Eigen::Index lo, Eigen::Index hi, Eigen::Index on_limit,
                                    Eigen::Index off_limit, double presence_level, double significance,
                                    double on_frac, double off_frac) {
  if (hi - lo < 3) return std::nullopt;
  const auto mx = wv.maxima(lo, hi);
  if (mx.empty()) return std::nullopt;
  std::size_t main = 0;
  for (std::size_t i = 1; i < mx.size(); ++i)
    if (wv.mag(mx[i]) > wv.mag(mx[main])) main = i;
  const double peak_mag = wv.mag(mx[main]);
  if (peak_mag < presence_level) return std::nullopt;

  std::optional<std::size_t> partner;
  const auto consider = [&](std::size_t j) {
    if ((wv.w[mx[j]] > 0.0) == (wv.w[mx[main]] > 0.0)) return;
    if (wv.mag(mx[j]) < significance * peak_mag) return;
    if (!partner || wv.mag(mx[j]) > wv.mag(mx[*partner])) partner = j;
  };
  if (main > 0) consider(main - 1);
  if (main + 1 < mx.size()) consider(main + 1);
  if (!partner) return std::nullopt;

  const Eigen::Index a = std::min(mx[main], mx[*partner]);
  const Eigen::Index b = std::max(mx[main], mx[*partner]);
  const auto peak = wv.zero_cross(a, b);
  if (!peak) return std::nullopt;
  return WaveResult{wv.walk(a, -1, on_frac, on_limit), *peak, wv.walk(b, +1, off_frac, off_limit)};
}

}  // namespace

Eigen::VectorXd wavelet_detail(const Eigen::VectorXd& x, int k) {
  if (k < 1 || k > 8) throw ParameterError("wavelet_detail: scale exponent out of range");
  const auto q = detail_filter(k);
  const auto len = static_cast<Eigen::Index>(q.size());
  const Eigen::Index delay = len / 2;
  const Eigen::Index n = x.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index m = 0; m < len; ++m) {
      const Eigen::Index j = std::clamp<Eigen::Index>(i + delay - m, 0, n - 1);
      acc += q[static_cast<std::size_t>(m)] * x[j];
    }
    out[i] = acc;
  }
  return out;
}

FiducialSet delineate(const EcgRecord& record, const BeatSeries& beats, const DelineationConfig& cfg) {
  FiducialSet out;
  out.fs = record.fs;
  const Eigen::Index n = record.size();
  const auto& r = beats.peak_idx;
  if (r.empty() || n < 8) {
    for (auto idx : r) {
      BeatFiducials f;
      f.r = idx;
      out.beats.push_back(f);
    }
    return out;
  }
  const Eigen::VectorXd wq = wavelet_detail(record.samples, cfg.qrs_scale);
  const Eigen::VectorXd ww = wavelet_detail(record.samples, cfg.wave_scale);
  const Waves qrs{wq};
  const Waves wave{ww};
  const auto smp = [&](double s) { return static_cast<Eigen::Index>(std::lround(s * record.fs)); };

  Eigen::Index prev_t_off = -1;  // -1 when the previous beat has no T wave
  for (std::size_t i = 0; i < r.size(); ++i) {
    BeatFiducials f;
    f.r = r[i];
    const Eigen::Index lo_b = i > 0 ? (r[i - 1] + r[i]) / 2 : std::max<Eigen::Index>(0, r[i] - smp(0.25));
    const Eigen::Index hi_b = i + 1 < r.size() ? (r[i] + r[i + 1]) / 2 : std::min<Eigen::Index>(n - 1, r[i] + smp(0.25));
    const Eigen::Index rr_next = i + 1 < r.size() ? r[i + 1] - r[i] : (i > 0 ? r[i] - r[i - 1] : smp(0.6));

    // QRS: first and last significant maxima around R at the fine scale.
    const Eigen::Index q_lo = std::max(lo_b, r[i] - smp(cfg.qrs_search_s));
    const Eigen::Index q_hi = std::min(hi_b, r[i] + smp(cfg.qrs_search_s));
    const auto mx = qrs.maxima(q_lo, q_hi);
    double m_qrs = 0.0;
    for (auto m : mx) m_qrs = std::max(m_qrs, qrs.mag(m));
    std::vector<Eigen::Index> sig;
    for (auto m : mx)
      if (qrs.mag(m) >= cfg.qrs_significance * m_qrs) sig.push_back(m);
    if (!sig.empty()) {
      f.qrs_on = std::min(qrs.walk(sig.front(), -1, cfg.qrs_on_threshold, std::max<Eigen::Index>(lo_b, 1)), r[i]);
      f.qrs_off = std::max(qrs.walk(sig.back(), +1, cfg.qrs_off_threshold, std::min<Eigen::Index>(hi_b, n - 2)), r[i]);
    }

    if (f.has_qrs()) {
      double m_wave_qrs = 0.0;
      for (Eigen::Index k = *f.qrs_on; k <= *f.qrs_off; ++k) m_wave_qrs = std::max(m_wave_qrs, wave.mag(k));

      // T wave after the J point.
      const Eigen::Index t_lo = std::max(*f.qrs_off + 1, r[i] + smp(cfg.t_start_s));
      const Eigen::Index t_hi = std::min(n - 2, r[i] + static_cast<Eigen::Index>(cfg.t_span * rr_next));
      const Eigen::Index t_limit = std::min(n - 2, r[i] + static_cast<Eigen::Index>(0.9 * rr_next));
      if (auto t = find_wave(wave, t_lo, t_hi, *f.qrs_off, t_limit, cfg.t_presence * m_wave_qrs,
                             cfg.wave_significance, cfg.t_on_threshold, cfg.t_off_threshold)) {
        f.t_on = t->on;
        f.t_peak = t->peak;
        f.t_off = t->off;
      }

      // P wave before the QRS onset, kept clear of the previous T wave.
      Eigen::Index p_lo = std::max<Eigen::Index>(1, *f.qrs_on - smp(cfg.p_search_s));
      if (i > 0) p_lo = std::max(p_lo, prev_t_off >= 0 ? prev_t_off : r[i - 1] + (r[i] - r[i - 1]) / 2);
      const Eigen::Index p_hi = *f.qrs_on - 1;
      if (auto p = find_wave(wave, p_lo, p_hi, p_lo, *f.qrs_on, cfg.p_presence * m_wave_qrs, cfg.wave_significance,
                             cfg.p_on_threshold, cfg.p_off_threshold)) {
        f.p_on = p->on;
        f.p_peak = p->peak;
        f.p_off = p->off;
      }
    }

    if (f.has_p() && !f.ordered()) f.p_on = f.p_peak = f.p_off = std::nullopt;
    if (f.has_t() && !f.ordered()) f.t_on = f.t_peak = f.t_off = std::nullopt;
    prev_t_off = f.t_off.value_or(-1);
    out.beats.push_back(f);
  }
  return out;
}

}  // namespace triage
