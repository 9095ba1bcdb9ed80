#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "triage/dsp.hpp"

namespace triage {

/// Heart-rate-variability features, in the order and spelling of the
/// published feature table. NaN marks a feature that could not be computed.
enum class Hrv : std::size_t {
  bSQI,
  Alpha1,
  Alpha2,
  AVNN,
  BETA,
  HFnorm,
  HFpeak,
  HFpower,
  IALS,
  LFnorm,
  LFpeak,
  LFpower,
  LFtoHF,
  PAS,
  PIP,
  pNN50,
  PSS,
  RMSSD,
  SampEn,
  SD1,
  SD2,
  SDNN,
  SEM,
  TotalPower,
  VLFnorm,
  VLFpower,
  kCount
};

struct HrvVector {
  static constexpr std::size_t kSize = static_cast<std::size_t>(Hrv::kCount);
  static const std::array<std::string_view, kSize> kNames;

  HrvVector() { values.fill(std::numeric_limits<double>::quiet_NaN()); }

  std::array<double, kSize> values;

  double& operator[](Hrv f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Hrv f) const { return values[static_cast<std::size_t>(f)]; }
  bool missing(Hrv f) const { return std::isnan((*this)[f]); }
  /// Copies every non-missing field of `other` into this vector.
  void merge(const HrvVector& other);
};

struct SpectralConfig {
  double vlf_lo = 0.003;
  double lf_lo = 0.04;
  double hf_lo = 0.15;
  double hf_hi = 0.40;
  double oversampling = 2.0;     // grid step = 1 / (oversampling * duration)
  double min_vlf_duration_s = 300.0;
};

struct NonlinearConfig {
  int sampen_m = 2;
  double sampen_r = 0.2;         // fraction of SDNN
  int alpha1_lo = 4, alpha1_hi = 15;
  int alpha2_lo = 16, alpha2_hi = 64;
};

struct HrvConfig {
  SpectralConfig spectral;
  NonlinearConfig nonlinear;
};

/// AVNN, SDNN, SEM, RMSSD, pNN50. Throws InsufficientDataError below 2 intervals.
HrvVector hrv_time_domain(std::span<const double> nn_ms);

/// PIP, IALS, PSS, PAS over the increment series. Throws below 4 intervals.
HrvVector hrv_fragmentation(std::span<const double> nn_ms);

/// Lomb-Scargle band powers, normalised powers, peaks, LF/HF and the VLF
/// log-log slope. `t_s` holds the time of each interval.
HrvVector hrv_spectral(std::span<const double> nn_ms, std::span<const double> t_s, const SpectralConfig& cfg = {});

/// SD1, SD2, SampEn, DFA Alpha1 / Alpha2.
HrvVector hrv_nonlinear(std::span<const double> nn_ms, const NonlinearConfig& cfg = {});

/// All features; bSQI is carried in from the quality module.
HrvVector compute_hrv(const NnSeries& nn, double bsqi, const HrvConfig& cfg = {});

// Building blocks exposed for testing.

/// Lomb-Scargle PSD (ms^2/Hz) of nn against t on the grid f_k = k * step,
/// k = 1..count, scaled so that sum(psd) * step approximates the variance.
Eigen::VectorXd lomb_scargle(std::span<const double> nn_ms, std::span<const double> t_s, double step,
                             Eigen::Index count);
double dfa_fluctuation(std::span<const double> nn_ms, int box);
double dfa_alpha(std::span<const double> nn_ms, int lo, int hi);
/// NaN when undefined (no template matches or r == 0).
double sample_entropy(std::span<const double> x, int m, double r);

}  // namespace triage
