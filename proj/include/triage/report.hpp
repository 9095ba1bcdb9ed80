#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "triage/experiment.hpp"
#include "triage/pipeline.hpp"

namespace triage {

// Run directory layout written by emit_reports:
//   table4.csv              model,train_auroc_mean,train_auroc_std,test_auroc_mean,test_auroc_std
//   splits.csv              model,split,ok,train_auroc,test_auroc,scenario_ppv,n_test,n_test_positive,error
//   importance.csv          model,split,rank,feature,importance (the selected features of each split)
//   importance_summary.csv  model,feature,times_selected,importance_mean,importance_std
//   test_scores.csv         model,split,patient_id,label,score
//   scenario.csv            model,k,ppv_mean,ppv_std,random_ppv,improvement
//   learning_curve.csv      model,fraction,train_patients,test_auroc_mean,test_auroc_std,n
//   age_histogram.csv       age_lo,age_hi,seizure,non_seizure
// Empty fields stand for undefined values.

/// "META+HRV+MOR" -> "meta_hrv_mor".
std::string variant_slug(Variant v);

void write_table4(std::ostream& os, const std::vector<VariantReport>& reports);
void write_splits(std::ostream& os, const std::vector<VariantReport>& reports);
void write_importance(std::ostream& os, const std::vector<VariantReport>& reports);
void write_importance_summary(std::ostream& os, const std::vector<VariantReport>& reports);
void write_test_scores(std::ostream& os, const std::vector<VariantReport>& reports);
void write_learning_curve(std::ostream& os, Variant variant, const std::vector<CurvePoint>& curve);
void write_age_histogram(std::ostream& os, const DatasetSummary& data, double bin_years = 1.0);

struct ScenarioRow {
  Variant variant = Variant::meta_hrv_mor;
  int k = 8;
  Stat ppv;
  double random_ppv = 0.0;   // mean of positives / n over the test sets
  double improvement = 0.0;  // ppv.mean / random_ppv - 1
};

/// Recomputes top-k PPV from the stored test scores of each split.
std::vector<ScenarioRow> scenario_table(const std::vector<VariantReport>& reports, int k);
void write_scenario(std::ostream& os, const std::vector<ScenarioRow>& rows);

/// Writes every table above into `dir`.
void emit_reports(const Evaluation& eval, int scenario_k, const std::filesystem::path& dir);

/// Writes models/<variant>_split<NN>.json for every successful split.
void write_split_models(const Evaluation& eval, const std::filesystem::path& dir);

/// manifest.json: config, dataset counts, notes, warnings and a hash of
/// every other file under `dir`. Holds no timestamps.
void write_manifest(const std::filesystem::path& dir, const nlohmann::json& config, const Evaluation* eval,
                    const std::string& command);

}  // namespace triage
