#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "triage/cohort.hpp"
#include "triage/experiment.hpp"
#include "triage/features.hpp"
#include "triage/local.hpp"
#include "triage/synth.hpp"

namespace triage {

struct PathsConfig {
  std::filesystem::path ecg_dir = "cohort/ecg";
  std::filesystem::path annotations = "cohort/annotations.jsonl";
  std::filesystem::path metadata = "cohort/metadata.csv";
  std::filesystem::path run_dir = "run";
};

struct SplitsConfig {
  int n = 10;
  double test_frac = 1.0 / 3.0;
};

struct CurveConfig {
  bool enabled = true;
  Variant variant = Variant::meta_hrv_mor;
  std::vector<double> fractions{0.25, 0.5, 0.75, 1.0};
};

struct RunConfig {
  std::uint64_t seed = 2024;
  int workers = 1;
  PathsConfig paths;
  CohortSpec synth;
  EcgFormat ecg_format = EcgFormat::binary;
  FeatureConfig features;
  SplitsConfig splits;
  MlConfig ml;
  std::vector<Variant> variants{kVariants.begin(), kVariants.end()};
  CurveConfig curve;
  LocalConfig local;

  /// Relative paths are resolved against `base`.
  void resolve_paths(const std::filesystem::path& base);
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys and bad values throw ConfigError.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace triage
