#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "triage/features.hpp"
#include "triage/forest.hpp"
#include "triage/scaler.hpp"
#include "triage/selection.hpp"

namespace triage {

enum class Variant { age, meta, age_hrv_mor, meta_hrv_mor };
inline constexpr std::array<Variant, 4> kVariants{Variant::age, Variant::meta, Variant::age_hrv_mor,
                                                  Variant::meta_hrv_mor};

std::string_view to_string(Variant v);  // "Age", "META", "Age+HRV+MOR", "META+HRV+MOR"
Variant parse_variant(std::string_view s);

/// Column indices (into feature_names()) used by a variant, ascending.
std::vector<int> variant_columns(Variant v);

struct Split {
  std::uint64_t seed = 0;
  std::vector<std::string> train, test;  // patient ids, sorted
};

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<Split> splits;
};

/// Repeated stratified random sub-sampling of patients. The test set takes
/// round(test_frac * n) patients, of which round(test_frac * positives) are
/// positive. Throws StratificationError when a class has fewer than 3 patients.
SplitPlan make_splits(const std::vector<std::string>& patients, const std::vector<int>& labels, int n = 10,
                      double test_frac = 1.0 / 3.0, std::uint64_t seed = 0);

struct MlConfig {
  int n_trees = 300;
  int rfe_target = 9;
  Hyper rfe_hyper;  // n_trees is overridden by the field above
  SearchSpace space;
  int search_folds = 5;
  int search_budget = 20;
  int search_initial = 5;
  int scenario_k = 8;
};

/// Everything needed to score new rows: scaler and imputation medians over
/// the variant's columns, the selected subset and the forest on it.
struct TrainedModel {
  static constexpr int kFormatVersion = 1;

  Variant variant = Variant::meta_hrv_mor;
  std::vector<std::string> columns;   // variant columns, by name
  MinMaxScaler scaler;
  std::vector<double> impute;         // scaled-space train medians per column
  std::vector<int> selected;          // positions into `columns`
  Forest forest;
  double cv_auroc = 0.0;              // best inner-CV score from the search

  /// `X` holds the variant columns in `columns` order.
  Eigen::VectorXd score(const Eigen::MatrixXd& X) const;
  std::vector<std::string> selected_names() const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
};

/// scale -> impute -> RFE -> Bayesian search -> final forest, on training rows
/// only. `groups` holds one id per row so inner folds keep patients whole.
TrainedModel fit_model(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& groups,
                       Variant variant, const MlConfig& cfg, std::uint64_t seed);

struct SplitResult {
  int index = 0;
  bool ok = false;
  std::string error;
  double train_auroc = 0.0;
  double test_auroc = 0.0;
  double scenario_ppv = 0.0;
  std::vector<std::string> test_patients;
  std::vector<double> test_scores;
  std::vector<int> test_labels;
  std::vector<double> importance;  // per selected feature, model.selected order
  TrainedModel model;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  int n = 0;
};
Stat summarize_stat(const std::vector<double>& v);

struct VariantReport {
  Variant variant = Variant::meta_hrv_mor;
  std::vector<SplitResult> splits;

  Stat train_auroc() const;
  Stat test_auroc() const;
  Stat scenario_ppv() const;
};

/// Trains on every passing window of the training patients and scores each
/// test patient's first passing window. Errors inside a split are recorded on
/// that split rather than thrown.
SplitResult run_split(const Dataset& data, const Split& split, int index, Variant variant, const MlConfig& cfg);
VariantReport run_variant(const Dataset& data, const SplitPlan& plan, Variant variant, const MlConfig& cfg,
                          int workers = 1);

/// PPV over the k highest scores; ties ordered by patient id.
double scenario_ppv(const std::vector<double>& scores, const std::vector<int>& labels,
                    const std::vector<std::string>& patient_ids, int k = 8);
/// Expected PPV of allocating monitors at random: positives / n.
double random_allocation_ppv(int positives, int n);
/// Relative improvement p / base - 1.
double improvement(double p, double base);

struct CurvePoint {
  double fraction = 0.0;
  double train_patients = 0.0;  // mean over used splits
  Stat test_auroc;
};

/// Subsamples each split's training patients (stratified, per-class rounding)
/// and reruns the variant. Fractions leaving fewer than 3 patients in a class
/// are skipped with a message appended to `warnings`. Output sorted by fraction.
std::vector<CurvePoint> learning_curve(const Dataset& data, const SplitPlan& plan, Variant variant,
                                       const MlConfig& cfg, std::vector<double> fractions, int workers,
                                       std::vector<std::string>& warnings);

/// Subsampled copy of a split (identity at fraction 1).
Split subsample_split(const Split& split, const Dataset& data, double fraction);

}  // namespace triage
