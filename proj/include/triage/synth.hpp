#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "triage/cohort.hpp"

namespace triage {

/// One Gaussian component of the template beat. Centre is relative to the R peak.
struct WaveShape {
  double amplitude_mv = 0.0;
  double center_s = 0.0;
  double width_s = 0.01;
};

/// Template P-QRS-T beat defined at a reference RR of 0.6 s. The T wave is
/// warped with sqrt(RR / 0.6); P and QRS keep their timing.
struct BeatTemplate {
  WaveShape p{0.12, -0.120, 0.016};
  WaveShape q{-0.10, -0.020, 0.006};
  WaveShape r{1.00, 0.000, 0.008};
  WaveShape s{-0.25, 0.020, 0.007};
  WaveShape t{0.30, 0.210, 0.034};
  double qrs_width_scale = 1.0;  // stretches Q/R/S widths and Q/S offsets
  double polarity = 1.0;         // -1 flips the whole lead

  static constexpr double kReferenceRrS = 0.6;
  /// Fiducial onsets/offsets sit this many widths from a Gaussian centre.
  static constexpr double kBoundaryWidths = 2.5;
};

struct IctalEpisode {
  double onset_s = 0.0;     // relative to the record start
  double duration_s = 0.0;
  double hr_rise = 0.0;     // fraction, 0.3 = +30 %
};

struct NoiseBurst {
  double start_s = 0.0;
  double duration_s = 0.0;
  double noise_mv = 1.0;    // standard deviation of the added white noise
};

struct SynthProfile {
  std::string patient_id = "P0000";
  std::string segment_id = "S000";
  double start_offset_s = 0.0;
  double fs = 250.0;
  double duration_s = 600.0;
  double mean_hr_bpm = 100.0;
  double hrv_level = 0.03;        // relative RR variability (std of RR / mean RR)
  double resp_hz = 0.3;           // respiratory sinus arrhythmia frequency
  double noise_mv = 0.01;         // broadband noise standard deviation
  double wander_mv = 0.05;        // baseline wander amplitude
  double age_years = 5.0;
  BeatTemplate beat;
  std::vector<IctalEpisode> episodes;
  std::vector<NoiseBurst> bursts;
  /// Annotated seizure events emitted alongside the record (absolute time).
  std::vector<SeizureEvent> annotations;
  std::optional<PatientMeta> meta;
};

/// Ground-truth fiducials for one beat, in seconds from the record start.
struct TrueFiducials {
  double p_on, p_peak, p_off;
  double qrs_on, r_peak, qrs_off;
  double t_on, t_peak, t_off;
  bool has_p;
};

struct SynthResult {
  EcgRecord record;
  std::vector<SeizureEvent> events;
  PatientMeta meta;
  std::vector<double> beat_times_s;   // RR ledger: R peak times
  std::vector<TrueFiducials> fiducials;

  std::vector<double> rr_s() const;
};

/// Deterministic template-based ECG synthesis. Throws ParameterError when an
/// ictal rise drives an RR interval below the 150 ms refractory period.
SynthResult synth_record(const SynthProfile& profile, std::uint64_t seed);

/// Synthetic cohort with a planted patient-level signal. Seizure patients get
/// faster and less variable heart rates, wider QRS complexes, flatter T waves
/// and more frequent epilepsy / developmental-delay flags; `effect` scales the
/// ECG differences (0 leaves only the clinical flags and age informative).
struct CohortSpec {
  int n_patients = 166;
  int n_positive = 18;
  int n_noisy_patients = 0;       // extra patients whose every hour is noise
  int hours_min = 3;              // recorded one-hour segments per patient
  int hours_max = 3;
  double segment_s = 3600.0;
  double noisy_hour_rate = 0.05;  // chance an hour is buried in noise
  double fs = 250.0;
  double effect = 1.0;
};

struct PatientPlan {
  std::string patient_id;
  bool positive = false;
  PatientMeta meta;
  double hr_bpm = 100.0;
  double hrv_level = 0.04;
  double qrs_width_scale = 1.0;
  double t_amplitude_mv = 0.3;
  std::vector<bool> noisy_hours;  // one entry per recorded hour
  std::vector<SeizureEvent> events;
};

/// Draws every patient's parameters without rendering any signal.
std::vector<PatientPlan> plan_cohort(const CohortSpec& spec, std::uint64_t seed);

/// One record per planned hour, contiguous from admission.
std::vector<EcgRecord> synth_patient_records(const PatientPlan& patient, const CohortSpec& spec, std::uint64_t seed);

/// Metadata and events of a plan, without records.
Cohort plan_tables(const std::vector<PatientPlan>& plan);

/// Whole cohort in memory (about 7 MB per hour at 250 Hz); larger cohorts
/// should go patient by patient through synth_patient_records.
Cohort synth_cohort(const std::vector<PatientPlan>& plan, const CohortSpec& spec, std::uint64_t seed);

/// Renders a template beat at given R times into `out` (used by tests to plant beats).
void render_beats(Eigen::Ref<Eigen::VectorXd> out, double fs, const BeatTemplate& beat,
                  const std::vector<double>& r_times_s, const std::vector<double>& rr_s);

}  // namespace triage
