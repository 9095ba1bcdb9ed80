#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "triage/cohort.hpp"
#include "triage/dsp.hpp"

namespace triage {

/// Fiducial sample indices for one beat. Absent waves stay empty.
struct BeatFiducials {
  std::optional<Eigen::Index> p_on, p_peak, p_off;
  std::optional<Eigen::Index> qrs_on;
  Eigen::Index r = 0;
  std::optional<Eigen::Index> qrs_off;  // J point
  std::optional<Eigen::Index> t_on, t_peak, t_off;

  bool has_p() const { return p_on && p_peak && p_off; }
  bool has_qrs() const { return qrs_on && qrs_off; }
  bool has_t() const { return t_on && t_peak && t_off; }
  /// P_on <= P <= P_off <= QRS_on <= R <= QRS_off <= T_on <= T <= T_off over present points.
  bool ordered() const;
};

struct FiducialSet {
  double fs = 0.0;
  std::vector<BeatFiducials> beats;

  std::size_t size() const { return beats.size(); }
};

struct DelineationConfig {
  int qrs_scale = 2;            // wavelet scale 2^k used for QRS
  int wave_scale = 4;           // scale for P and T
  double qrs_search_s = 0.070;  // half-window around R for QRS maxima
  double qrs_significance = 0.06;
  double qrs_on_threshold = 0.3;
  double qrs_off_threshold = 0.4;
  double t_start_s = 0.090;     // T maxima searched in [R + t_start, R + t_span * RR]
  double t_span = 0.6;
  double t_on_threshold = 0.35;
  double t_off_threshold = 0.35;
  double p_search_s = 0.220;    // P maxima searched in [QRS_on - p_search, QRS_on)
  double p_on_threshold = 0.75;
  double p_off_threshold = 0.8;
  double wave_significance = 0.25;  // partner maximum relative to the main one
  double t_presence = 0.06;     // main T maximum relative to the QRS maximum at the wave scale
  double p_presence = 0.06;
};

/// Undecimated dyadic wavelet transform with the quadratic-spline prototype
/// (h = [1 3 3 1] / 8, g = [2 -2]); returns the detail signal at scale 2^k,
/// aligned with x. Positive values mark rising slopes.
Eigen::VectorXd wavelet_detail(const Eigen::VectorXd& x, int k);

/// Wavelet delineation of P, QRS and T around the given beats.
FiducialSet delineate(const EcgRecord& record, const BeatSeries& beats, const DelineationConfig& cfg = {});

}  // namespace triage
