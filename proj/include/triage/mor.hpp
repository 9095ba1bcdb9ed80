#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string_view>

#include "triage/delineate.hpp"

namespace triage {

/// Morphology features: 38 interval durations followed by 36 wave
/// characteristics. NaN marks a family with too few usable beats.
struct MorVector {
  static constexpr std::size_t kIntervalCount = 38;
  static constexpr std::size_t kWaveCount = 36;
  static constexpr std::size_t kSize = kIntervalCount + kWaveCount;
  static const std::array<std::string_view, kSize> kNames;

  MorVector() { values.fill(std::numeric_limits<double>::quiet_NaN()); }

  std::array<double, kSize> values;

  /// Throws ParameterError for an unknown name.
  static std::size_t index(std::string_view name);
  double& operator[](std::string_view name) { return values[index(name)]; }
  double operator[](std::string_view name) const { return values[index(name)]; }
  void merge(const MorVector& other);
};

struct MorConfig {
  std::size_t min_beats = 10;    // per feature family
  double fallback_baseline_s = 0.020;  // window before QRS onset when no P wave is found
};

double qtc_bazett(double qt_ms, double rr_ms);
double qtc_fridericia(double qt_ms, double rr_ms);
double qtc_framingham(double qt_ms, double rr_ms);
double qtc_hodges(double qt_ms, double rr_ms);

/// Duration, RR-ratio, P-onset-to-R and QTc statistics. `keep` is the
/// normal-interval mask over successive beat pairs (empty keeps all).
MorVector mor_intervals(const FiducialSet& fid, const std::vector<bool>& keep = {}, const MorConfig& cfg = {});

/// Amplitude, area and reference-QRS statistics in 1e-4 V (areas in 1e-4 V s)
/// for a record in mV.
MorVector mor_waves(const EcgRecord& record, const FiducialSet& fid, const MorConfig& cfg = {});

/// Delineates `morph` (a morphology band-passed record) and computes both families.
MorVector compute_mor(const EcgRecord& morph, const BeatSeries& beats, const NnSeries& nn,
                      const DelineationConfig& dcfg = {}, const MorConfig& cfg = {});

}  // namespace triage
