#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "triage/cohort.hpp"

namespace triage {

/// R-peak sample indices for one record plus the identity needed to map them
/// back to time.
struct BeatSeries {
  std::string patient_id;
  std::string segment_id;
  double fs = 0.0;
  double start_offset = 0.0;
  Eigen::Index n_samples = 0;
  std::vector<Eigen::Index> peak_idx;  // strictly increasing

  std::size_t size() const { return peak_idx.size(); }
  bool empty() const { return peak_idx.empty(); }
  /// Peak times in seconds relative to the record start.
  std::vector<double> times_s() const;
  std::vector<double> rr_ms() const;

  static BeatSeries empty_for(const EcgRecord& record);
};

/// Normal-to-normal intervals retained from a BeatSeries.
struct NnSeries {
  std::vector<double> nn_ms;
  std::vector<double> t_s;        // time of the closing beat of each retained interval
  std::vector<bool> keep_mask;    // over the source rr_ms

  std::size_t size() const { return nn_ms.size(); }
  Eigen::Map<const Eigen::VectorXd> nn() const {
    return {nn_ms.data(), static_cast<Eigen::Index>(nn_ms.size())};
  }
};

struct BandpassConfig {
  int order = 5;
  double f_lo_hz = 3.0;
  double f_hi_hz = 45.0;
  double pad_s = 1.0;
};

/// Low-corner variant used ahead of delineation, where the P and T waves need
/// their sub-3 Hz content.
inline BandpassConfig morphology_bandpass() { return {5, 0.5, 45.0, 1.0}; }

struct PrimaryDetectorConfig {
  double threshold = 0.5;            // fraction of the running envelope reference
  double refractory_s = 0.150;
  double integration_s = 7.0 / 256;  // moving-window integration length
  double reference_percentile = 98.0;
  double reference_window_s = 10.0;  // centred window for the running reference
};

struct SecondaryDetectorConfig {
  double integration_s = 0.150;
  double refractory_s = 0.200;
  double learning_s = 2.0;
  double searchback_factor = 1.66;
  double relearn_s = 3.0;  // no beat for this long: levels are re-learned from the last learning_s
};

struct NnFilterConfig {
  double rr_min_ms = 300.0;
  double rr_max_ms = 1500.0;
  int ma_window = 10;
  double ma_deviation_pct = 20.0;
  double quotient_lo = 0.8;
  double quotient_hi = 1.25;
  bool use_range = true;
  bool use_moving_average = true;
  bool use_quotient = true;
};

/// Zero-phase Butterworth band-pass. Throws ConfigError when fs <= 2 * f_hi.
EcgRecord bandpass(const EcgRecord& record, const BandpassConfig& cfg = {});

/// Energy-envelope detector (squared derivative, moving-window integration,
/// threshold against a running percentile of the envelope, hard refractory).
/// Throws InsufficientDataError for records shorter than 2 s.
BeatSeries detect_rpeaks_primary(const EcgRecord& filtered, const PrimaryDetectorConfig& cfg = {});

/// Dual adaptive-threshold integrate-and-fire detector with search-back.
BeatSeries detect_rpeaks_secondary(const EcgRecord& filtered, const SecondaryDetectorConfig& cfg = {});

/// +1 when R waves point up in `raw` around the given beats, -1 otherwise.
int dominant_polarity(const EcgRecord& raw, const BeatSeries& beats);

/// Moves every peak to the dominant-polarity extremum of `raw` within +-25 ms.
BeatSeries refine_rpeaks(const EcgRecord& raw, const BeatSeries& beats, double half_window_s = 0.025,
                         double refractory_s = 0.150);

/// Range, moving-average and quotient gates over RR intervals. Each gate is
/// evaluated on the unfiltered RR series; an interval is kept when it passes
/// every enabled gate.
NnSeries filter_nn(const BeatSeries& beats, const NnFilterConfig& cfg = {});
NnSeries filter_nn_intervals(const std::vector<double>& rr_ms, const std::vector<double>& t_s,
                             const NnFilterConfig& cfg = {});

}  // namespace triage
