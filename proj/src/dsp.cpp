#include "triage/dsp.hpp"

#include <algorithm>
#include <cmath>

#include "triage/butterworth.hpp"
#include "triage/errors.hpp"
#include "triage/stats.hpp"

namespace triage {
namespace {

constexpr double kMinDetectorDurationS = 2.0;
// Envelope references below this derivative amplitude (mV per sample) are
// treated as a flat line.
constexpr double kMinSlopeMv = 1e-3;

void require_length(const EcgRecord& r) {
  r.validate();
  if (r.duration() < kMinDetectorDurationS)
    throw InsufficientDataError("record " + r.patient_id + "/" + r.segment_id + " is shorter than 2 s");
}

Eigen::Index samples_of(double seconds, double fs) {
  return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(seconds * fs)));
}

/// Centred moving mean with a window of w samples (shrinks at the edges).
Eigen::VectorXd centred_mean(const Eigen::VectorXd& x, Eigen::Index w) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd prefix(n + 1);
  prefix[0] = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  Eigen::VectorXd out(n);
  const Eigen::Index left = w / 2;
  const Eigen::Index right = w - 1 - left;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - left);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + right);
    out[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
  }
  return out;
}

Eigen::Index argmax_abs(const Eigen::VectorXd& x, Eigen::Index lo, Eigen::Index hi) {
  lo = std::max<Eigen::Index>(lo, 0);
  hi = std::min<Eigen::Index>(hi, x.size() - 1);
  Eigen::Index best = lo;
  for (Eigen::Index i = lo + 1; i <= hi; ++i)
    if (std::abs(x[i]) > std::abs(x[best])) best = i;
  return best;
}

/// Keeps peaks at least `gap` samples apart, preferring the larger |x|.
std::vector<Eigen::Index> enforce_refractory(const std::vector<Eigen::Index>& cand, const Eigen::VectorXd& x,
                                             Eigen::Index gap) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index c : cand) {
    if (!out.empty() && c - out.back() < gap) {
      if (std::abs(x[c]) > std::abs(x[out.back()])) out.back() = c;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<double> BeatSeries::times_s() const {
  std::vector<double> t(peak_idx.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(peak_idx[i]) / fs;
  return t;
}

std::vector<double> BeatSeries::rr_ms() const {
  std::vector<double> rr;
  if (peak_idx.size() < 2) return rr;
  rr.reserve(peak_idx.size() - 1);
  for (std::size_t i = 1; i < peak_idx.size(); ++i)
    rr.push_back(1000.0 * static_cast<double>(peak_idx[i] - peak_idx[i - 1]) / fs);
  return rr;
}

BeatSeries BeatSeries::empty_for(const EcgRecord& record) {
  BeatSeries b;
  b.patient_id = record.patient_id;
  b.segment_id = record.segment_id;
  b.fs = record.fs;
  b.start_offset = record.start_offset;
  b.n_samples = record.size();
  return b;
}

EcgRecord bandpass(const EcgRecord& record, const BandpassConfig& cfg) {
  record.validate();
  if (record.fs <= 2.0 * cfg.f_hi_hz)
    throw ConfigError("band-pass needs fs above " + std::to_string(2.0 * cfg.f_hi_hz) + " Hz, got " +
                      std::to_string(record.fs));
  const auto sos = butterworth_bandpass<double>(cfg.order, cfg.f_lo_hz, cfg.f_hi_hz, record.fs);
  EcgRecord out = record;
  out.samples = filtfilt(sos, record.samples, samples_of(cfg.pad_s, record.fs));
  return out;
}

BeatSeries detect_rpeaks_primary(const EcgRecord& rec, const PrimaryDetectorConfig& cfg) {
  require_length(rec);
  const Eigen::VectorXd& x = rec.samples;
  const Eigen::Index n = x.size();
  BeatSeries beats = BeatSeries::empty_for(rec);

  Eigen::VectorXd energy(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) energy[i] = (x[i + 1] - x[i]) * (x[i + 1] - x[i]);
  energy[n - 1] = 0.0;
  const Eigen::VectorXd env = centred_mean(energy, samples_of(cfg.integration_s, rec.fs));

  // Running reference: percentile of the envelope over a centred window,
  // recomputed once per second.
  const Eigen::Index block = samples_of(1.0, rec.fs);
  const Eigen::Index half = samples_of(cfg.reference_window_s / 2.0, rec.fs);
  const Eigen::Index n_blocks = (n + block - 1) / block;
  Eigen::VectorXd reference(n_blocks);
  std::vector<double> buf;
  for (Eigen::Index b = 0; b < n_blocks; ++b) {
    const Eigen::Index centre = b * block + block / 2;
    const Eigen::Index lo = std::max<Eigen::Index>(0, centre - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n, centre + half);
    buf.assign(env.data() + lo, env.data() + hi);
    const auto k = static_cast<std::size_t>(
        std::ceil(cfg.reference_percentile / 100.0 * static_cast<double>(buf.size()))) - 1;
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k), buf.end());
    reference[b] = buf[k];
  }

  const double floor = kMinSlopeMv * kMinSlopeMv;
  std::vector<Eigen::Index> candidates;
  Eigen::Index i = 0;
  while (i < n) {
    const double ref = reference[i / block];
    if (ref > floor && env[i] > cfg.threshold * ref) {
      Eigen::Index j = i;
      while (j + 1 < n && env[j + 1] > cfg.threshold * reference[(j + 1) / block]) ++j;
      candidates.push_back(argmax_abs(x, i, j));
      i = j + 1;
    } else {
      ++i;
    }
  }
  beats.peak_idx = enforce_refractory(candidates, x, static_cast<Eigen::Index>(std::ceil(cfg.refractory_s * rec.fs)));
  return beats;
}

BeatSeries detect_rpeaks_secondary(const EcgRecord& rec, const SecondaryDetectorConfig& cfg) {
  require_length(rec);
  const Eigen::VectorXd& x = rec.samples;
  const Eigen::Index n = x.size();
  BeatSeries beats = BeatSeries::empty_for(rec);

  Eigen::VectorXd sq = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 2; i + 2 < n; ++i) {
    const double d = (2.0 * x[i + 2] + x[i + 1] - x[i - 1] - 2.0 * x[i - 2]) / 8.0;
    sq[i] = d * d;
  }
  const Eigen::Index w = samples_of(cfg.integration_s, rec.fs);
  const Eigen::VectorXd mwi = centred_mean(sq, w);

  const Eigen::Index learn = std::min(n, samples_of(cfg.learning_s, rec.fs));
  double spki = 0.25 * mwi.head(learn).maxCoeff();
  double npki = 0.5 * mwi.head(learn).mean();
  const double floor = kMinSlopeMv * kMinSlopeMv / 4.0;
  if (mwi.maxCoeff() <= floor) return beats;

  const Eigen::Index refractory = static_cast<Eigen::Index>(std::ceil(cfg.refractory_s * rec.fs));
  std::vector<Eigen::Index> qrs;      // accepted MWI peak positions
  std::vector<Eigen::Index> noise;    // rejected MWI peaks since the last QRS
  std::vector<double> recent_rr;
  const Eigen::Index relearn = samples_of(cfg.relearn_s, rec.fs);
  Eigen::Index anchor = 0;  // last accepted beat or re-learn

  for (Eigen::Index c = 1; c + 1 < n; ++c) {
    if (!(mwi[c] > mwi[c - 1] && mwi[c] >= mwi[c + 1])) continue;
    const double m = mwi[c];
    if (c - std::max(anchor, qrs.empty() ? Eigen::Index{0} : qrs.back()) > relearn) {
      const auto recent = mwi.segment(std::max<Eigen::Index>(0, c - learn), std::min(learn, c));
      spki = 0.25 * recent.maxCoeff();
      npki = 0.5 * recent.mean();
      anchor = c;
      noise.clear();
      recent_rr.clear();
    }
    const double thr1 = npki + 0.25 * (spki - npki);
    if (m > thr1 && m > floor) {
      if (!qrs.empty() && c - qrs.back() < refractory) {
        if (m > mwi[qrs.back()]) qrs.back() = c;
        continue;
      }
      if (!qrs.empty() && !recent_rr.empty()) {
        double rr_avg = 0.0;
        for (double v : recent_rr) rr_avg += v;
        rr_avg /= static_cast<double>(recent_rr.size());
        if (static_cast<double>(c - qrs.back()) > cfg.searchback_factor * rr_avg) {
          Eigen::Index best = -1;
          for (Eigen::Index cand : noise)
            if (cand - qrs.back() >= refractory && c - cand >= refractory && mwi[cand] > 0.5 * thr1 &&
                (best < 0 || mwi[cand] > mwi[best]))
              best = cand;
          if (best >= 0) {
            spki = 0.25 * mwi[best] + 0.75 * spki;
            recent_rr.push_back(static_cast<double>(best - qrs.back()));
            qrs.push_back(best);
          }
        }
      }
      spki = 0.125 * m + 0.875 * spki;
      if (!qrs.empty()) recent_rr.push_back(static_cast<double>(c - qrs.back()));
      if (recent_rr.size() > 8) recent_rr.erase(recent_rr.begin());
      qrs.push_back(c);
      noise.clear();
    } else {
      npki = 0.125 * m + 0.875 * npki;
      noise.push_back(c);
    }
  }

  std::vector<Eigen::Index> located;
  located.reserve(qrs.size());
  for (Eigen::Index c : qrs) located.push_back(argmax_abs(x, c - w / 2, c + w / 2));
  std::sort(located.begin(), located.end());
  located.erase(std::unique(located.begin(), located.end()), located.end());
  beats.peak_idx = enforce_refractory(located, x, refractory);
  return beats;
}

int dominant_polarity(const EcgRecord& raw, const BeatSeries& beats) {
  const Eigen::Index half = samples_of(0.05, raw.fs);
  int votes = 0;
  for (Eigen::Index p : beats.peak_idx) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, p - half);
    const Eigen::Index hi = std::min<Eigen::Index>(raw.size() - 1, p + half);
    const auto seg = raw.samples.segment(lo, hi - lo + 1);
    const double mid = median(seg);
    votes += (seg.maxCoeff() - mid) >= (mid - seg.minCoeff()) ? 1 : -1;
  }
  return votes >= 0 ? 1 : -1;
}

BeatSeries refine_rpeaks(const EcgRecord& raw, const BeatSeries& beats, double half_window_s, double refractory_s) {
  BeatSeries out = beats;
  if (beats.empty()) return out;
  const int polarity = dominant_polarity(raw, beats);
  const auto half = static_cast<Eigen::Index>(std::floor(half_window_s * raw.fs));
  const Eigen::Index n = raw.size();
  const Eigen::VectorXd& x = raw.samples;
  for (auto& p : out.peak_idx) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, p - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, p + half);
    Eigen::Index best = p;
    for (Eigen::Index i = lo; i <= hi; ++i)
      if (polarity * x[i] > polarity * x[best]) best = i;
    p = best;
  }
  // Two peaks can drift towards each other; keep the stronger one.
  const auto gap = static_cast<Eigen::Index>(std::ceil(refractory_s * raw.fs));
  std::vector<Eigen::Index> kept;
  for (Eigen::Index p : out.peak_idx) {
    if (!kept.empty() && p - kept.back() < gap) {
      if (polarity * x[p] > polarity * x[kept.back()]) kept.back() = p;
      continue;
    }
    kept.push_back(p);
  }
  out.peak_idx = std::move(kept);
  return out;
}

NnSeries filter_nn_intervals(const std::vector<double>& rr, const std::vector<double>& t_s,
                             const NnFilterConfig& cfg) {
  const std::size_t n = rr.size();
  std::vector<bool> keep(n, true);
  const auto half = static_cast<std::ptrdiff_t>(cfg.ma_window / 2);
  const auto window = [&](std::size_t i) {
    const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(i) - half));
    const auto hi = std::min<std::size_t>(n - 1, i + static_cast<std::size_t>(half));
    return std::pair{lo, hi};
  };

  if (cfg.use_range)
    for (std::size_t i = 0; i < n; ++i)
      if (rr[i] < cfg.rr_min_ms || rr[i] > cfg.rr_max_ms) keep[i] = false;

  if (cfg.use_moving_average && n > 0) {
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + rr[i];
    for (std::size_t i = 0; i < n; ++i) {
      const auto [lo, hi] = window(i);
      const double avg = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
      if (std::abs(rr[i] - avg) > cfg.ma_deviation_pct / 100.0 * avg) keep[i] = false;
    }
  }

  if (cfg.use_quotient && n > 1) {
    std::vector<bool> q_keep(n, true);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double q = rr[i] / rr[i + 1];
      if (q >= cfg.quotient_lo && q <= cfg.quotient_hi) continue;
      // Blame the member of the pair farther from the local median.
      const auto [lo, hi] = window(i);
      const auto hi2 = std::min(n - 1, hi + 1);
      const double ref = median(std::vector<double>(rr.begin() + static_cast<std::ptrdiff_t>(lo),
                                                    rr.begin() + static_cast<std::ptrdiff_t>(hi2) + 1));
      const double d0 = std::abs(rr[i] - ref);
      const double d1 = std::abs(rr[i + 1] - ref);
      q_keep[d0 > d1 ? i : i + 1] = false;
    }
    for (std::size_t i = 0; i < n; ++i) keep[i] = keep[i] && q_keep[i];
  }

  NnSeries out;
  out.keep_mask = keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    out.nn_ms.push_back(rr[i]);
    out.t_s.push_back(i < t_s.size() ? t_s[i] : 0.0);
  }
  return out;
}

NnSeries filter_nn(const BeatSeries& beats, const NnFilterConfig& cfg) {
  const auto rr = beats.rr_ms();
  std::vector<double> t(rr.size());
  for (std::size_t i = 0; i < rr.size(); ++i) t[i] = static_cast<double>(beats.peak_idx[i + 1]) / beats.fs;
  return filter_nn_intervals(rr, t, cfg);
}

}  // namespace triage
