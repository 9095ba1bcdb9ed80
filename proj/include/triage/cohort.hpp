#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace triage {

/// Uniformly sampled single-lead ECG segment. Samples are in millivolts.
struct EcgRecord {
  std::string patient_id;
  std::string segment_id;
  double fs = 0.0;            // Hz
  double start_offset = 0.0;  // seconds from admission
  Eigen::VectorXd samples;

  double duration() const { return static_cast<double>(samples.size()) / fs; }
  Eigen::Index size() const { return samples.size(); }

  /// Throws ParameterError when fs <= 0, samples are empty, or start_offset < 0.
  void validate() const;
};

enum class Manifestation { subclinical, clinical, unknown };

std::string_view to_string(Manifestation m);
Manifestation parse_manifestation(std::string_view s);

struct SeizureEvent {
  std::string patient_id;
  double t_start = 0.0;  // seconds from admission
  double t_end = 0.0;
  Manifestation manifestation = Manifestation::unknown;

  double duration() const { return t_end - t_start; }
  void validate() const;
};

enum class Gender { male, female, missing };

/// The sixteen clinical variables. Binary flags are ternary: true, false or
/// missing (nullopt).
struct PatientMeta {
  static constexpr std::size_t kFlagCount = 14;
  static constexpr std::size_t kFeatureCount = 16;
  static const std::array<std::string_view, kFlagCount> kFlagNames;
  static const std::array<std::string_view, kFeatureCount> kColumnNames;

  std::string patient_id;
  double age = 0.0;  // years
  Gender gender = Gender::missing;
  std::array<std::optional<bool>, kFlagCount> flags{};

  /// Numeric encoding in column order. Missing flags and gender become 0.
  std::array<double, kFeatureCount> feature_values() const;
  std::optional<bool>& flag(std::string_view name);
  void validate() const;
};

struct PatientLabel {
  std::string patient_id;
  bool seizure_patient = false;
};

inline constexpr double kLabelHorizonS = 172800.0;  // 48 h
inline constexpr double kLabelMinDurationS = 300.0;  // status epilepticus

/// Seizure patient iff some event lasts strictly longer than min_dur_s and
/// starts strictly before horizon_s.
PatientLabel label_patient(std::string_view patient_id, std::span<const SeizureEvent> events,
                           double horizon_s = kLabelHorizonS, double min_dur_s = kLabelMinDurationS);

struct Cohort {
  std::vector<EcgRecord> records;
  std::vector<SeizureEvent> events;
  std::vector<PatientMeta> meta;

  /// Sorted unique patient ids present in records.
  std::vector<std::string> patient_ids() const;
  std::vector<SeizureEvent> events_for(std::string_view patient_id) const;
  const PatientMeta* meta_for(std::string_view patient_id) const;

  /// Sorts records, events and metadata into canonical order.
  void canonicalize();
  /// Throws IntegrityError on orphan events or metadata rows.
  void check_integrity() const;
};

// File formats ---------------------------------------------------------------
//
// ECG segments live in one directory. Each segment is either
//   <stem>.csv  with header `t_s,mv`, or
//   <stem>.bin  little-endian float32 samples,
// next to a sidecar <stem>.json holding {patient_id, segment_id, fs, start_offset}.
// The sidecar is mandatory for .bin; for .csv without a sidecar the stem must be
// `<patient_id>__<segment_id>` and fs / start_offset are inferred from t_s.
//
// Annotations: JSON lines {patient_id, t_start, t_end, manifestation}.
// Metadata: CSV with columns patient_id followed by the sixteen clinical names.

enum class EcgFormat { csv, binary };

std::vector<std::filesystem::path> list_segments(const std::filesystem::path& ecg_dir);
EcgRecord read_segment(const std::filesystem::path& path);
/// Segment paths grouped by patient id (from the sidecar or the file stem)
/// without reading any samples.
std::map<std::string, std::vector<std::filesystem::path>> segments_by_patient(const std::filesystem::path& ecg_dir);
void write_segment(const std::filesystem::path& ecg_dir, const EcgRecord& record, EcgFormat format);

std::vector<SeizureEvent> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, std::span<const SeizureEvent> events);

std::vector<PatientMeta> read_metadata(const std::filesystem::path& path);
void write_metadata(const std::filesystem::path& path, std::span<const PatientMeta> meta);

Cohort load_cohort(const std::filesystem::path& ecg_dir, const std::filesystem::path& annotations_path,
                   const std::filesystem::path& metadata_path);
void write_cohort(const Cohort& cohort, const std::filesystem::path& ecg_dir,
                  const std::filesystem::path& annotations_path, const std::filesystem::path& metadata_path,
                  EcgFormat format = EcgFormat::binary);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace triage
