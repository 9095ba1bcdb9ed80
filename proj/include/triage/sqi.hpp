#pragma once

#include <span>
#include <vector>

#include "triage/dsp.hpp"

namespace triage {

inline constexpr double kBsqiAgreeMs = 50.0;
inline constexpr double kBsqiGate = 0.8;

/// Per-window agreement between two R-peak detectors.
struct SqiSeries {
  double window_len_s = 60.0;
  std::vector<double> window_start_s;
  std::vector<double> bsqi;

  std::size_t size() const { return bsqi.size(); }
  double mean() const;
  /// bSQI of the window containing t (seconds from record start); 1.0 past the end.
  double at(double t_s) const;
};

/// Size of a maximum one-to-one matching between two sorted peak-time lists
/// where a pair matches when |a - b| <= tol. A two-pointer sweep is optimal
/// because the compatibility graph is an interval graph on a line.
std::size_t match_count(std::span<const double> a, std::span<const double> b, double tol);

/// n_match / (n_a + n_b - n_match); 1.0 when both lists are empty.
double bsqi(std::span<const double> a_s, std::span<const double> b_s, double agree_ms = kBsqiAgreeMs);
double bsqi(const BeatSeries& a, const BeatSeries& b, double agree_ms = kBsqiAgreeMs);

/// Tiles [0, duration_s) into windows of window_s (the last one may be short).
SqiSeries windowed_sqi(double duration_s, const BeatSeries& a, const BeatSeries& b, double window_s = 60.0,
                       double agree_ms = kBsqiAgreeMs);
SqiSeries windowed_sqi(const EcgRecord& record, const BeatSeries& a, const BeatSeries& b, double window_s = 60.0,
                       double agree_ms = kBsqiAgreeMs);

/// True iff the mean window bSQI reaches the gate.
bool hour_quality_gate(const SqiSeries& sqi, double gate = kBsqiGate);

}  // namespace triage
