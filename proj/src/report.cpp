#include "triage/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "io_util.hpp"
#include "triage/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace triage {

namespace {

using namespace io;

std::string num(double v) { return std::isnan(v) ? std::string() : format_double(v); }

template <typename F>
void write_file(const fs::path& path, F&& body) {
  auto out = open_out(path);
  body(out);
}

std::string fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

// Selected features of a split with their importances, most important first.
std::vector<std::pair<std::string, double>> ranked(const SplitResult& s) {
  const auto names = s.model.selected_names();
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < names.size() && i < s.importance.size(); ++i) out.emplace_back(names[i], s.importance[i]);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

}  // namespace

std::string variant_slug(Variant v) {
  std::string out;
  for (char c : to_string(v)) out += c == '+' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void write_table4(std::ostream& os, const std::vector<VariantReport>& reports) {
  os << "model,train_auroc_mean,train_auroc_std,test_auroc_mean,test_auroc_std\n";
  for (const auto& r : reports) {
    const Stat tr = r.train_auroc(), te = r.test_auroc();
    os << to_string(r.variant) << ',' << num(tr.mean) << ',' << num(tr.std) << ',' << num(te.mean) << ','
       << num(te.std) << '\n';
  }
}

void write_splits(std::ostream& os, const std::vector<VariantReport>& reports) {
  os << "model,split,ok,train_auroc,test_auroc,scenario_ppv,n_test,n_test_positive,error\n";
  for (const auto& r : reports)
    for (const auto& s : r.splits) {
      const auto npos = std::count(s.test_labels.begin(), s.test_labels.end(), 1);
      std::string err = s.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      os << to_string(r.variant) << ',' << s.index << ',' << (s.ok ? 1 : 0) << ',';
      if (s.ok)
        os << num(s.train_auroc) << ',' << num(s.test_auroc) << ',' << num(s.scenario_ppv);
      else
        os << ",,";
      os << ',' << s.test_labels.size() << ',' << npos << ',' << err << '\n';
    }
}

void write_importance(std::ostream& os, const std::vector<VariantReport>& reports) {
  os << "model,split,rank,feature,importance\n";
  for (const auto& r : reports)
    for (const auto& s : r.splits) {
      if (!s.ok) continue;
      int rank = 1;
      for (const auto& [name, imp] : ranked(s))
        os << to_string(r.variant) << ',' << s.index << ',' << rank++ << ',' << name << ',' << num(imp) << '\n';
    }
}

void write_importance_summary(std::ostream& os, const std::vector<VariantReport>& reports) {
  os << "model,feature,times_selected,importance_mean,importance_std\n";
  for (const auto& r : reports) {
    std::map<std::string, std::vector<double>> by_feature;
    for (const auto& s : r.splits)
      if (s.ok)
        for (const auto& [name, imp] : ranked(s)) by_feature[name].push_back(imp);
    std::vector<std::pair<std::string, Stat>> rows;
    for (const auto& [name, v] : by_feature) rows.emplace_back(name, summarize_stat(v));
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      if (a.second.n != b.second.n) return a.second.n > b.second.n;
      return a.second.mean > b.second.mean;
    });
    for (const auto& [name, st] : rows)
      os << to_string(r.variant) << ',' << name << ',' << st.n << ',' << num(st.mean) << ',' << num(st.std) << '\n';
  }
}

void write_test_scores(std::ostream& os, const std::vector<VariantReport>& reports) {
  os << "model,split,patient_id,label,score\n";
  for (const auto& r : reports)
    for (const auto& s : r.splits)
      for (std::size_t i = 0; i < s.test_scores.size(); ++i)
        os << to_string(r.variant) << ',' << s.index << ',' << s.test_patients[i] << ',' << s.test_labels[i] << ','
           << num(s.test_scores[i]) << '\n';
}

void write_learning_curve(std::ostream& os, Variant variant, const std::vector<CurvePoint>& curve) {
  os << "model,fraction,train_patients,test_auroc_mean,test_auroc_std,n\n";
  for (const auto& p : curve)
    os << to_string(variant) << ',' << num(p.fraction) << ',' << num(p.train_patients) << ',' << num(p.test_auroc.mean)
       << ',' << num(p.test_auroc.std) << ',' << p.test_auroc.n << '\n';
}

void write_age_histogram(std::ostream& os, const DatasetSummary& data, double bin_years) {
  if (!(bin_years > 0)) throw ParameterError("write_age_histogram: bin width must be positive");
  os << "age_lo,age_hi,seizure,non_seizure\n";
  double max_age = 0.0;
  for (double a : data.ages)
    if (!std::isnan(a)) max_age = std::max(max_age, a);
  const auto bins = static_cast<std::size_t>(std::floor(max_age / bin_years)) + 1;
  std::vector<int> pos(bins, 0), neg(bins, 0);
  for (std::size_t i = 0; i < data.ages.size(); ++i) {
    if (std::isnan(data.ages[i])) continue;
    const auto b = std::min(bins - 1, static_cast<std::size_t>(std::floor(data.ages[i] / bin_years)));
    ++(data.labels[i] ? pos : neg)[b];
  }
  for (std::size_t b = 0; b < bins; ++b)
    os << num(static_cast<double>(b) * bin_years) << ',' << num(static_cast<double>(b + 1) * bin_years) << ','
       << pos[b] << ',' << neg[b] << '\n';
}

std::vector<ScenarioRow> scenario_table(const std::vector<VariantReport>& reports, int k) {
  std::vector<ScenarioRow> out;
  for (const auto& r : reports) {
    ScenarioRow row;
    row.variant = r.variant;
    row.k = k;
    std::vector<double> ppv, base;
    for (const auto& s : r.splits) {
      if (!s.ok) continue;
      ppv.push_back(scenario_ppv(s.test_scores, s.test_labels, s.test_patients, k));
      base.push_back(random_allocation_ppv(static_cast<int>(std::count(s.test_labels.begin(), s.test_labels.end(), 1)),
                                           static_cast<int>(s.test_labels.size())));
    }
    row.ppv = summarize_stat(ppv);
    row.random_ppv = summarize_stat(base).mean;
    row.improvement = base.empty() || row.random_ppv == 0.0 ? std::nan("") : improvement(row.ppv.mean, row.random_ppv);
    out.push_back(row);
  }
  return out;
}

void write_scenario(std::ostream& os, const std::vector<ScenarioRow>& rows) {
  os << "model,k,ppv_mean,ppv_std,random_ppv,improvement\n";
  for (const auto& r : rows)
    os << to_string(r.variant) << ',' << r.k << ',' << num(r.ppv.mean) << ',' << num(r.ppv.std) << ','
       << num(r.random_ppv) << ',' << num(r.improvement) << '\n';
}

void emit_reports(const Evaluation& eval, int scenario_k, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "table4.csv", [&](std::ostream& os) { write_table4(os, eval.reports); });
  write_file(dir / "splits.csv", [&](std::ostream& os) { write_splits(os, eval.reports); });
  write_file(dir / "importance.csv", [&](std::ostream& os) { write_importance(os, eval.reports); });
  write_file(dir / "importance_summary.csv", [&](std::ostream& os) { write_importance_summary(os, eval.reports); });
  write_file(dir / "test_scores.csv", [&](std::ostream& os) { write_test_scores(os, eval.reports); });
  write_file(dir / "scenario.csv",
             [&](std::ostream& os) { write_scenario(os, scenario_table(eval.reports, scenario_k)); });
  if (eval.curve_enabled)
    write_file(dir / "learning_curve.csv", [&](std::ostream& os) { write_learning_curve(os, eval.curve_variant, eval.curve); });
  write_file(dir / "age_histogram.csv", [&](std::ostream& os) { write_age_histogram(os, eval.dataset); });
}

void write_split_models(const Evaluation& eval, const fs::path& dir) {
  const fs::path models = dir / "models";
  fs::create_directories(models);
  for (const auto& r : eval.reports)
    for (const auto& s : r.splits) {
      if (!s.ok) continue;
      char name[64];
      std::snprintf(name, sizeof(name), "_split%02d.json", s.index);
      write_file(models / (variant_slug(r.variant) + name), [&](std::ostream& os) { os << s.model.to_json().dump() << '\n'; });
    }
}

void write_manifest(const fs::path& dir, const json& config, const Evaluation* eval, const std::string& command) {
  json files = json::array();
  std::vector<fs::path> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths)
    files.push_back({{"path", fs::relative(p, dir).generic_string()},
                     {"bytes", static_cast<std::uint64_t>(fs::file_size(p))},
                     {"fnv1a64", fnv1a_file(p)}});
  json m = {{"format", "triage-run"},
            {"version", 1},
            {"command", command},
            {"config", config},
            {"files", files},
            {"notes",
             {"Training uses every window of the first 48 h that passes the bSQI gate; test patients are scored "
              "on their first passing window, which is window 0 unless that hour failed the gate.",
              "Test patients' windows never enter training, scaling, imputation, feature selection or the search.",
              "Every random stream derives from the master seed as mix64(mix64(seed ^ fnv1a(tag)) + index)."}}};
  if (eval) {
    m["dataset"] = {{"patients", eval->dataset.patients.size()},
                    {"positive_patients", std::count(eval->dataset.labels.begin(), eval->dataset.labels.end(), 1)},
                    {"rows", eval->dataset.rows},
                    {"positive_rows", eval->dataset.positive_rows},
                    {"dropped", eval->dataset.dropped},
                    {"first_window_late", eval->dataset.late_first}};
    m["warnings"] = eval->warnings;
  }
  write_file(dir / "manifest.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
}

}  // namespace triage
