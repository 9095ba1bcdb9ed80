#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "triage/cohort.hpp"
#include "triage/delineate.hpp"
#include "triage/dsp.hpp"
#include "triage/hrv.hpp"
#include "triage/mor.hpp"
#include "triage/sqi.hpp"

namespace triage {

struct FeatureConfig {
  double window_s = 3600.0;   // one row per window of admission time
  int max_windows = 48;       // only the first 48 h feed the dataset
  double min_coverage = 0.5;  // fraction of a window that must hold signal
  double sqi_window_s = 60.0;
  double gate = kBsqiGate;
  BandpassConfig detect_band;
  BandpassConfig morph_band = morphology_bandpass();
  PrimaryDetectorConfig primary;
  SecondaryDetectorConfig secondary;
  NnFilterConfig nn;
  HrvConfig hrv;
  DelineationConfig delineation;
  MorConfig mor;
};

/// Features of one window. HRV and MOR are only computed for windows that
/// pass the quality gate.
struct HourFeatures {
  std::string patient_id;
  int hour_index = 0;
  double start_s = 0.0;     // admission time
  double duration_s = 0.0;
  double bsqi_mean = 0.0;
  bool passes = false;
  HrvVector hrv;
  MorVector mor;
};

HourFeatures extract_hour(const EcgRecord& window, int hour_index, const FeatureConfig& cfg = {});

/// Cuts a patient's records into admission-time windows [h W, (h+1) W) and
/// extracts each. A window uses the longest single-record piece inside it;
/// windows covered less than min_coverage are skipped.
std::vector<HourFeatures> extract_patient(std::span<const EcgRecord> records, const FeatureConfig& cfg = {});

/// Loads the records of patient i on demand.
using RecordLoader = std::function<std::vector<EcgRecord>(std::size_t)>;

/// extract_patient over patients 0..n-1, holding at most `workers` patients'
/// records in memory. Output is in patient order.
std::vector<HourFeatures> extract_streamed(std::size_t n_patients, const RecordLoader& load,
                                           const FeatureConfig& cfg = {}, int workers = 1);
/// extract_patient over every patient of an in-memory cohort, in patient-id order.
std::vector<HourFeatures> extract_cohort(const Cohort& cohort, const FeatureConfig& cfg = {}, int workers = 1);

/// Patient-hour example. `values` follows Dataset::feature_names.
struct FeatureRow {
  std::string patient_id;
  int hour_index = 0;
  int label = 0;
  double bsqi = 0.0;
  std::vector<double> values;
};

/// 16 META, 26 HRV, 74 MOR column names.
const std::vector<std::string>& feature_names();
void write_data_dictionary(std::ostream& os);

struct Dataset {
  std::vector<std::string> names;
  std::vector<FeatureRow> rows;            // every passing window, by (patient, hour)
  std::vector<std::string> patients;       // retained patients, sorted
  std::vector<int> labels;                 // per retained patient
  std::vector<std::size_t> first_row;      // per retained patient: its first passing window
  std::vector<std::string> dropped;        // patients without any passing window
  std::vector<std::string> late_first;     // retained patients whose window 0 did not pass

  std::size_t patient_index(const std::string& id) const;
  Eigen::MatrixXd matrix(const std::vector<std::size_t>& rows, const std::vector<int>& cols) const;
  std::size_t positive_rows() const;
};

/// Joins windows with metadata and labels. Patients absent from `meta` get
/// NaN META columns; labels come from label_patient over `events`.
Dataset assemble_dataset(const std::vector<HourFeatures>& hours, std::span<const PatientMeta> meta,
                         std::span<const SeizureEvent> events);

/// Throws InsufficientDataError for an empty cohort or when no patient keeps
/// a passing window.
Dataset build_dataset(const Cohort& cohort, const FeatureConfig& cfg = {}, int workers = 1);

// Window table: one line per extracted window (passing or not) with every
// feature column; NaN and non-computed values are empty fields.
void write_hours_csv(const std::filesystem::path& path, const std::vector<HourFeatures>& hours);
std::vector<HourFeatures> read_hours_csv(const std::filesystem::path& path);

}  // namespace triage
