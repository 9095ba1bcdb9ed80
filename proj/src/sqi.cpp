#include "triage/sqi.hpp"

#include <algorithm>
#include <cmath>

namespace triage {

double SqiSeries::mean() const {
  if (bsqi.empty()) return 1.0;
  double s = 0.0;
  for (double v : bsqi) s += v;
  return s / static_cast<double>(bsqi.size());
}

double SqiSeries::at(double t_s) const {
  if (bsqi.empty() || t_s < 0.0) return 1.0;
  const auto k = static_cast<std::size_t>(std::floor(t_s / window_len_s));
  return k < bsqi.size() ? bsqi[k] : 1.0;
}

std::size_t match_count(std::span<const double> a, std::span<const double> b, double tol) {
  std::size_t i = 0, j = 0, matched = 0;
  while (i < a.size() && j < b.size()) {
    if (std::abs(a[i] - b[j]) <= tol) {
      ++matched;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return matched;
}

double bsqi(std::span<const double> a, std::span<const double> b, double agree_ms) {
  if (a.empty() && b.empty()) return 1.0;
  const auto m = static_cast<double>(match_count(a, b, agree_ms / 1000.0));
  return m / (static_cast<double>(a.size() + b.size()) - m);
}

double bsqi(const BeatSeries& a, const BeatSeries& b, double agree_ms) {
  const auto ta = a.times_s();
  const auto tb = b.times_s();
  return bsqi(ta, tb, agree_ms);
}

SqiSeries windowed_sqi(double duration_s, const BeatSeries& a, const BeatSeries& b, double window_s,
                       double agree_ms) {
  SqiSeries out;
  out.window_len_s = window_s;
  const auto ta = a.times_s();
  const auto tb = b.times_s();
  const auto n_windows = static_cast<std::size_t>(std::ceil(duration_s / window_s - 1e-9));
  std::size_t ia = 0, ib = 0;
  for (std::size_t w = 0; w < n_windows; ++w) {
    const double lo = static_cast<double>(w) * window_s;
    const double hi = lo + window_s;
    const std::size_t a0 = ia, b0 = ib;
    while (ia < ta.size() && ta[ia] < hi) ++ia;
    while (ib < tb.size() && tb[ib] < hi) ++ib;
    out.window_start_s.push_back(lo);
    out.bsqi.push_back(bsqi(std::span(ta).subspan(a0, ia - a0), std::span(tb).subspan(b0, ib - b0), agree_ms));
  }
  return out;
}

SqiSeries windowed_sqi(const EcgRecord& record, const BeatSeries& a, const BeatSeries& b, double window_s,
                       double agree_ms) {
  return windowed_sqi(record.duration(), a, b, window_s, agree_ms);
}

bool hour_quality_gate(const SqiSeries& sqi, double gate) { return sqi.mean() >= gate; }

}  // namespace triage
