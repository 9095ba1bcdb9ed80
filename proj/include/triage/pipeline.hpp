#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "triage/config.hpp"
#include "triage/experiment.hpp"
#include "triage/features.hpp"
#include "triage/local.hpp"

namespace triage {

/// Cohort on disk: segment paths per patient plus the annotation and
/// metadata tables. Samples are only read by load_patient.
struct CohortIndex {
  std::vector<std::string> patients;  // sorted
  std::vector<std::vector<std::filesystem::path>> segments;
  std::vector<SeizureEvent> events;
  std::vector<PatientMeta> meta;

  /// Records of patient i, in start order.
  std::vector<EcgRecord> load_patient(std::size_t i) const;
};

/// Throws IntegrityError for annotations or metadata of unknown patients.
CohortIndex index_cohort(const PathsConfig& paths);

/// Plans and writes the synthetic cohort one patient at a time.
void write_synth_cohort(const RunConfig& cfg);

std::vector<HourFeatures> extract_features(const CohortIndex& cohort, const FeatureConfig& cfg, int workers = 1);

struct SegmentSummary {
  std::string patient_id;
  std::string segment_id;
  double start_offset = 0.0;
  double duration_s = 0.0;
  std::size_t beats_primary = 0;
  std::size_t beats_secondary = 0;
  std::size_t nn_intervals = 0;
  double bsqi_mean = 0.0;
  std::size_t sqi_windows = 0;
  std::size_t sqi_windows_passing = 0;
};

/// Filtering, both detectors, refinement, NN filtering and bSQI per segment.
std::vector<SegmentSummary> preprocess_cohort(const CohortIndex& cohort, const RunConfig& cfg);
void write_preprocess_csv(const std::filesystem::path& path, const std::vector<SegmentSummary>& rows);

struct LocalRun {
  std::vector<LocalRecordResult> records;
  EventMatchReport osorio15, osorio30;  // over every record, unsuppressed detections only
};

/// Each patient's detections are matched against that patient's events.
LocalRun run_local(const CohortIndex& cohort, const RunConfig& cfg);
void write_detections_csv(const std::filesystem::path& path, const LocalRun& run);

/// patient_id,hour_index,label,bsqi followed by every feature column.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

/// Labels shuffled across retained patients, class counts kept.
Dataset permute_labels(Dataset data, std::uint64_t seed);

/// Fits one variant on every retained patient.
TrainedModel train_final(const Dataset& data, Variant variant, const MlConfig& cfg, std::uint64_t seed);

struct DatasetSummary {
  std::vector<std::string> patients;
  std::vector<int> labels;
  std::vector<double> ages;  // NaN without metadata
  std::size_t rows = 0;
  std::size_t positive_rows = 0;
  std::vector<std::string> dropped;
  std::vector<std::string> late_first;

  static DatasetSummary of(const Dataset& data);
  nlohmann::json to_json() const;
  static DatasetSummary from_json(const nlohmann::json& j);
};

struct Evaluation {
  std::uint64_t seed = 0;
  SplitPlan plan;
  DatasetSummary dataset;
  std::vector<VariantReport> reports;
  bool curve_enabled = false;
  Variant curve_variant = Variant::meta_hrv_mor;
  std::vector<CurvePoint> curve;
  std::vector<std::string> warnings;

  /// Everything except the fitted models.
  nlohmann::json to_json() const;
  static Evaluation from_json(const nlohmann::json& j);
};

/// Splits, every configured variant and the optional learning curve.
Evaluation evaluate(const Dataset& data, const RunConfig& cfg);

}  // namespace triage
