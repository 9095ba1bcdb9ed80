#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include "test_util.hpp"
#include "triage/config.hpp"
#include "triage/errors.hpp"
#include "triage/experiment.hpp"
#include "triage/pipeline.hpp"
#include "triage/report.hpp"
#include "triage/synth.hpp"

using namespace triage;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> ids(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("P" + std::to_string(1000 + i));
  return out;
}

HourFeatures window(const std::string& pid, int hour, bool passes, double value = 0.0) {
  HourFeatures h;
  h.patient_id = pid;
  h.hour_index = hour;
  h.start_s = 3600.0 * hour;
  h.duration_s = 3600.0;
  h.bsqi_mean = passes ? 0.95 : 0.4;
  h.passes = passes;
  h.hrv.values.fill(value);
  h.mor.values.fill(value);
  return h;
}

// Patients with three passing windows each; positives carry a shift on the
// first HRV column and a younger age.
struct Fixture {
  std::vector<HourFeatures> hours;
  std::vector<PatientMeta> meta;
  std::vector<SeizureEvent> events;
};

Fixture planted(int n, int positives, std::uint64_t seed) {
  Fixture f;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const std::string pid = "P" + std::to_string(100 + i);
    const bool pos = i % (n / positives) == 0 && i / (n / positives) < positives;
    PatientMeta m;
    m.patient_id = pid;
    m.age = std::abs(8.0 + 4.0 * g(rng));
    for (auto& flag : m.flags) flag = g(rng) > 0;
    f.meta.push_back(m);
    if (pos) f.events.push_back({pid, 20000.0, 20400.0, Manifestation::subclinical});
    for (int h = 0; h < 3; ++h) {
      HourFeatures w = window(pid, h, true);
      for (auto& v : w.hrv.values) v = g(rng);
      for (auto& v : w.mor.values) v = g(rng);
      w.hrv.values[0] += pos ? 4.0 : 0.0;
      f.hours.push_back(w);
    }
  }
  return f;
}

RunConfig small_config() {
  RunConfig c;
  c.seed = 11;
  c.splits.n = 3;
  c.ml.n_trees = 12;
  c.ml.search_budget = 5;
  c.ml.search_initial = 3;
  c.ml.search_folds = 3;
  c.curve.fractions = {1.0, 0.5};
  return c;
}

}  // namespace

TEST_CASE("patient splits at cohort scale") {
  const auto pids = ids(166);
  std::vector<int> labels(166, 0);
  for (int i = 0; i < 52; ++i) labels[static_cast<std::size_t>(3 * i)] = 1;
  const SplitPlan plan = make_splits(pids, labels, 10, 1.0 / 3.0, 5);
  REQUIRE(plan.splits.size() == 10);
  const double global = 52.0 / 166.0;
  for (const auto& s : plan.splits) {
    CHECK(s.train.size() == 111);
    CHECK(s.test.size() == 55);
    CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    std::set<std::string> all(s.train.begin(), s.train.end());
    for (const auto& t : s.test) CHECK(all.insert(t).second);
    CHECK(all.size() == 166);
    int test_pos = 0;
    for (const auto& t : s.test) test_pos += labels[static_cast<std::size_t>(std::stoi(t.substr(1)) - 1000)];
    CHECK(std::abs(test_pos - global * 55.0) <= 1.0);
    CHECK(std::abs((52 - test_pos) - global * 111.0) <= 1.0);
  }
  const SplitPlan again = make_splits(pids, labels, 10, 1.0 / 3.0, 5);
  const SplitPlan other = make_splits(pids, labels, 10, 1.0 / 3.0, 6);
  bool differs = false;
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(again.splits[i].test == plan.splits[i].test);
    differs = differs || other.splits[i].test != plan.splits[i].test;
  }
  CHECK(differs);
  CHECK(plan.splits[0].test != plan.splits[1].test);
}

TEST_CASE("patient splits need three patients per class") {
  std::vector<int> labels(20, 0);
  labels[0] = labels[1] = 1;
  CHECK_THROWS_AS(make_splits(ids(20), labels, 10, 1.0 / 3.0, 1), StratificationError);
  labels[2] = 1;
  CHECK_NOTHROW(make_splits(ids(20), labels, 10, 1.0 / 3.0, 1));
}

TEST_CASE("scenario PPV over the top k") {
  const auto pids = ids(10);
  std::vector<double> s{0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05};
  std::vector<int> y{1, 0, 1, 0, 1, 0, 1, 0, 1, 1};
  CHECK(scenario_ppv(s, y, pids, 8) == 0.5);
  // ties resolved by patient id
  std::vector<double> tied(10, 0.5);
  std::vector<int> first_pos{1, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(scenario_ppv(tied, first_pos, pids, 1) == 1.0);
  std::vector<int> last_pos{0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
  CHECK(scenario_ppv(tied, last_pos, pids, 9) == 0.0);
  CHECK_THROWS_AS(scenario_ppv(s, y, pids, 11), ParameterError);
  CHECK_THROWS_AS(scenario_ppv(s, y, pids, 0), ParameterError);

  // perfect scorer on 6 of 55 positives
  std::vector<double> perfect(55);
  std::vector<int> lab(55, 0);
  for (int i = 0; i < 55; ++i) perfect[static_cast<std::size_t>(i)] = i < 6 ? 1.0 - 0.01 * i : 0.1;
  for (int i = 0; i < 6; ++i) lab[static_cast<std::size_t>(i)] = 1;
  CHECK(scenario_ppv(perfect, lab, ids(55), 8) == 0.75);
}

TEST_CASE("random allocation and relative improvement") {
  CHECK(random_allocation_ppv(6, 55) == 6.0 / 55.0);
  CHECK(std::lround(100.0 * random_allocation_ppv(6, 55)) == 11);
  CHECK(improvement(0.51, 0.32) == doctest::Approx(0.59375).epsilon(1e-12));
  CHECK(std::lround(100.0 * improvement(0.51, 0.32)) == 59);
  CHECK(std::lround(100.0 * improvement(0.41, 0.32)) == 28);
  CHECK_THROWS_AS(improvement(0.5, 0.0), ParameterError);
  CHECK_THROWS_AS(random_allocation_ppv(7, 6), ParameterError);
}

TEST_CASE("dataset assembly drops noise-only patients") {
  std::vector<HourFeatures> hours{window("A", 0, true, 1.0), window("A", 1, true, 2.0), window("B", 0, false),
                                  window("B", 1, true, 3.0),  window("C", 0, false),     window("C", 1, false),
                                  window("D", 0, true, 4.0)};
  PatientMeta a, b, c;
  a.patient_id = "A";
  a.age = 3.0;
  b.patient_id = "B";
  b.age = 9.5;
  c.patient_id = "C";
  std::vector<PatientMeta> meta{a, b, c};
  std::vector<SeizureEvent> ev{{"B", 7200.0, 7560.0, Manifestation::clinical},
                               {"A", 3600.0, 3840.0, Manifestation::clinical}};
  const Dataset d = assemble_dataset(hours, meta, ev);
  CHECK(d.patients == std::vector<std::string>{"A", "B", "D"});
  CHECK(d.labels == std::vector<int>{0, 1, 0});
  CHECK(d.dropped == std::vector<std::string>{"C"});
  CHECK(d.late_first == std::vector<std::string>{"B"});
  REQUIRE(d.rows.size() == 4);
  CHECK(d.rows[d.first_row[1]].hour_index == 1);
  CHECK(d.rows[d.first_row[1]].values[16] == 3.0);
  CHECK(d.rows[0].values.size() == 116);
  CHECK(d.rows[0].values[0] == 3.0);
  CHECK(std::isnan(d.rows[3].values[0]));  // D has no metadata
  CHECK(d.positive_rows() == 1);
  for (const auto& r : d.rows) CHECK(r.label == d.labels[d.patient_index(r.patient_id)]);
}

TEST_CASE("variant column sets") {
  CHECK(variant_columns(Variant::age) == std::vector<int>{0});
  CHECK(variant_columns(Variant::meta).size() == 16);
  CHECK(variant_columns(Variant::age_hrv_mor).size() == 101);
  CHECK(variant_columns(Variant::age_hrv_mor).front() == 0);
  CHECK(variant_columns(Variant::age_hrv_mor)[1] == 16);
  CHECK(variant_columns(Variant::meta_hrv_mor).size() == 116);
  for (Variant v : kVariants) CHECK(parse_variant(to_string(v)) == v);
  CHECK(variant_slug(Variant::meta_hrv_mor) == "meta_hrv_mor");
}

TEST_CASE("cohort plan labels and row bookkeeping") {
  CohortSpec spec;
  spec.hours_min = 24;
  spec.hours_max = 48;
  spec.n_positive = 26;
  const auto plan = plan_cohort(spec, 3);
  REQUIRE(plan.size() == 166);
  std::vector<HourFeatures> hours;
  std::vector<PatientMeta> meta;
  std::vector<SeizureEvent> events;
  int planned_pass = 0;
  for (const auto& p : plan) {
    meta.push_back(p.meta);
    events.insert(events.end(), p.events.begin(), p.events.end());
    CHECK(label_patient(p.patient_id, p.events).seizure_patient == p.positive);
    for (std::size_t h = 0; h < p.noisy_hours.size(); ++h) {
      hours.push_back(window(p.patient_id, static_cast<int>(h), !p.noisy_hours[h]));
      planned_pass += !p.noisy_hours[h];
    }
  }
  const Dataset d = assemble_dataset(hours, meta, events);
  CHECK(d.rows.size() == static_cast<std::size_t>(planned_pass));
  CHECK(std::count(d.labels.begin(), d.labels.end(), 1) == 26);

  const SplitPlan sp = make_splits(d.patients, d.labels, 10, 1.0 / 3.0, 3);
  for (const auto& s : sp.splits) {
    const std::set<std::string> train(s.train.begin(), s.train.end());
    const auto n = std::count_if(d.rows.begin(), d.rows.end(), [&](const FeatureRow& r) { return train.count(r.patient_id) > 0; });
    CHECK(std::abs(static_cast<double>(n) - 3667.0) <= 0.1 * 3667.0);
  }
}

TEST_CASE("label permutation keeps class counts") {
  const Fixture f = planted(30, 10, 1);
  const Dataset d = assemble_dataset(f.hours, f.meta, f.events);
  const Dataset p = permute_labels(d, 9);
  CHECK(std::count(p.labels.begin(), p.labels.end(), 1) == 10);
  CHECK(p.labels != d.labels);
  for (const auto& r : p.rows) CHECK(r.label == p.labels[p.patient_index(r.patient_id)]);
  CHECK(permute_labels(d, 9).labels == p.labels);
}

TEST_CASE("learning curve subsampling") {
  const Fixture f = planted(30, 10, 2);
  const Dataset d = assemble_dataset(f.hours, f.meta, f.events);
  RunConfig cfg = small_config();
  const SplitPlan plan = make_splits(d.patients, d.labels, 3, 1.0 / 3.0, cfg.seed);
  const Split& s = plan.splits[0];
  CHECK(subsample_split(s, d, 1.0).train == s.train);
  const Split half = subsample_split(s, d, 0.5);
  const Split most = subsample_split(s, d, 0.8);
  CHECK(half.train.size() == 11);  // 7 positives and 13 negatives, each halved and rounded
  for (const auto& id : half.train) CHECK(std::binary_search(most.train.begin(), most.train.end(), id));
  CHECK(half.test == s.test);

  std::vector<std::string> warnings;
  const auto curve = learning_curve(d, plan, Variant::age_hrv_mor, cfg.ml, {1.0, 0.1, 0.6}, 1, warnings);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].fraction == 0.6);
  CHECK(curve[1].fraction == 1.0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("0.1") != std::string::npos);
  const VariantReport full = run_variant(d, plan, Variant::age_hrv_mor, cfg.ml);
  CHECK(curve[1].test_auroc.mean == full.test_auroc().mean);
  CHECK(full.test_auroc().mean > 0.8);
}

TEST_CASE("run configuration") {
  RunConfig c = RunConfig::from_json(nlohmann::json::parse(R"({"seed": 5, "ml": {"n_trees": 40}})"));
  CHECK(c.seed == 5);
  CHECK(c.ml.n_trees == 40);
  CHECK(c.ml.rfe_target == 9);
  CHECK(c.variants.size() == 4);
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());

  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"sed": 5})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"ml": {"search": {"budjet": 9}}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"ml": {"n_trees": "many"}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"variants": ["HRV"]})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"splits": {"test_frac": 1.5}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"([1, 2])")), ConfigError);
}

TEST_CASE("reports are complete and reproducible") {
  const Fixture f = planted(36, 12, 3);
  const Dataset d = assemble_dataset(f.hours, f.meta, f.events);
  const RunConfig cfg = small_config();
  const Evaluation e = evaluate(d, cfg);
  REQUIRE(e.reports.size() == 4);
  for (const auto& r : e.reports)
    for (const auto& s : r.splits) CHECK_MESSAGE(s.ok, s.error);

  const fs::path a = test::scratch_dir("report_a"), b = test::scratch_dir("report_b"), c = test::scratch_dir("report_c");
  emit_reports(e, cfg.ml.scenario_k, a);
  write_split_models(e, a);
  emit_reports(evaluate(d, cfg), cfg.ml.scenario_k, b);
  emit_reports(Evaluation::from_json(e.to_json()), cfg.ml.scenario_k, c);
  for (const char* name : {"table4.csv", "splits.csv", "importance.csv", "importance_summary.csv", "test_scores.csv",
                           "scenario.csv", "learning_curve.csv", "age_histogram.csv"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
    CHECK(slurp(a / name) == slurp(c / name));
  }

  const auto t4 = lines_of(slurp(a / "table4.csv"));
  REQUIRE(t4.size() == 5);
  for (const auto& l : t4) CHECK(std::count(l.begin(), l.end(), ',') == 4);

  std::map<std::pair<std::string, std::string>, int> per_split;
  const auto imp = lines_of(slurp(a / "importance.csv"));
  for (std::size_t i = 1; i < imp.size(); ++i) {
    std::istringstream in(imp[i]);
    std::string model, split;
    std::getline(in, model, ',');
    std::getline(in, split, ',');
    ++per_split[{model, split}];
  }
  for (int s = 0; s < cfg.splits.n; ++s) {
    CHECK(per_split[{"META+HRV+MOR", std::to_string(s)}] == 9);
    CHECK(per_split[{"Age+HRV+MOR", std::to_string(s)}] == 9);
    CHECK(per_split[{"META", std::to_string(s)}] == 9);
    CHECK(per_split[{"Age", std::to_string(s)}] == 1);
  }

  const TrainedModel m = TrainedModel::from_json(nlohmann::json::parse(slurp(a / "models" / "meta_hrv_mor_split00.json")));
  CHECK(m.selected.size() == 9);
  write_manifest(a, cfg.to_json(), &e, "evaluate");
  const std::string first = slurp(a / "manifest.json");
  write_manifest(a, cfg.to_json(), &e, "evaluate");
  CHECK(slurp(a / "manifest.json") == first);
  CHECK(first.find("first passing window") != std::string::npos);
}

#ifdef TRIAGE_CLI
TEST_CASE("command line synth to evaluate") {
  const fs::path dir = test::scratch_dir("cli");
  nlohmann::json cfg = {
      {"seed", 3},
      {"paths", {{"ecg_dir", "cohort/ecg"}, {"annotations", "cohort/ann.jsonl"}, {"metadata", "cohort/meta.csv"}, {"run_dir", "run"}}},
      {"synth", {{"n_patients", 24}, {"n_positive", 8}, {"n_noisy_patients", 1}, {"hours_min", 1}, {"hours_max", 2}, {"segment_s", 240.0}}},
      {"features", {{"window_s", 240.0}}},
      {"splits", {{"n", 2}}},
      {"ml", {{"n_trees", 10}, {"search", {{"budget", 5}, {"initial", 3}, {"folds", 3}}}}},
      {"learning_curve", {{"enabled", false}}}};
  std::ofstream(dir / "run.json") << cfg.dump(2);
  std::ofstream(dir / "bad.json") << R"({"seeds": 1})";
  const std::string cli = TRIAGE_CLI;
  const auto run = [&](const std::string& args) {
    const int rc = std::system((cli + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  CHECK(run("--help") == 0);
  CHECK(run("evaluate") == 2);
  CHECK(run("frobnicate -c " + (dir / "run.json").string()) == 2);
  CHECK(run("evaluate -c " + (dir / "bad.json").string()) == 1);
  CHECK(run("report -q -c " + (dir / "run.json").string()) == 1);  // nothing evaluated yet
  REQUIRE(run("synth -q -c " + (dir / "run.json").string()) == 0);
  CHECK(run("synth -q -c " + (dir / "run.json").string()) == 1);  // refuses to overwrite
  REQUIRE(run("features -q -c " + (dir / "run.json").string()) == 0);
  REQUIRE(run("preprocess -q -c " + (dir / "run.json").string()) == 0);
  REQUIRE(run("detect-local -q -c " + (dir / "run.json").string()) == 0);
  REQUIRE(run("evaluate -q -c " + (dir / "run.json").string()) == 0);
  REQUIRE(run("scenario -q -c " + (dir / "run.json").string()) == 0);
  REQUIRE(run("train -q -c " + (dir / "run.json").string()) == 0);
  const fs::path rd = dir / "run";
  for (const char* name : {"manifest.json", "table4.csv", "results.json", "hours.csv", "dataset.csv",
                           "data_dictionary.csv", "preprocess.csv", "detections.csv", "table3.csv", "scenario.csv",
                           "models/final_meta_hrv_mor.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(rd / name));
  }
  CHECK(lines_of(slurp(rd / "table4.csv")).size() == 5);
  CHECK(lines_of(slurp(rd / "data_dictionary.csv")).size() == 117);

  const std::string table = slurp(rd / "table4.csv");
  REQUIRE(run("report -q -c " + (dir / "run.json").string()) == 0);
  CHECK(slurp(rd / "table4.csv") == table);
  const auto manifest = nlohmann::json::parse(slurp(rd / "manifest.json"));
  CHECK(manifest.at("dataset").at("dropped").size() >= 1);
}
#endif
