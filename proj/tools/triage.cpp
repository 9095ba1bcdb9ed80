// triage: command-line driver for the seizure-risk pipelines.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "triage/config.hpp"
#include "triage/errors.hpp"
#include "triage/pipeline.hpp"
#include "triage/report.hpp"

namespace fs = std::filesystem;
using namespace triage;

namespace {

constexpr int kUsageExit = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> run_dir;
  std::optional<int> workers;
  bool quiet = false;
  bool overwrite = false;
};

bool g_quiet = false;

void log(const std::string& msg) {
  if (!g_quiet) std::cerr << "triage: " << msg << '\n';
}

RunConfig load_config(const Options& o) {
  RunConfig cfg = RunConfig::load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.run_dir) cfg.paths.run_dir = fs::absolute(*o.run_dir);
  if (o.workers) cfg.workers = *o.workers;
  cfg.validate();
  fs::create_directories(cfg.paths.run_dir);
  return cfg;
}

std::ofstream open(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::vector<HourFeatures> compute_hours(const RunConfig& cfg, const CohortIndex& cohort) {
  log("extracting features for " + std::to_string(cohort.patients.size()) + " patients");
  auto hours = extract_features(cohort, cfg.features, cfg.workers);
  write_hours_csv(cfg.paths.run_dir / "hours.csv", hours);
  return hours;
}

Dataset dataset_for(const RunConfig& cfg) {
  const CohortIndex cohort = index_cohort(cfg.paths);
  const fs::path cached = cfg.paths.run_dir / "hours.csv";
  std::vector<HourFeatures> hours;
  if (fs::exists(cached)) {
    log("using window table " + cached.string());
    hours = read_hours_csv(cached);
  } else {
    hours = compute_hours(cfg, cohort);
  }
  Dataset d = assemble_dataset(hours, cohort.meta, cohort.events);
  if (d.patients.empty()) throw InsufficientDataError("no patient has a window passing the quality gate");
  log(std::to_string(d.patients.size()) + " patients, " + std::to_string(d.rows.size()) + " windows, " +
      std::to_string(d.dropped.size()) + " dropped");
  return d;
}

Evaluation load_results(const RunConfig& cfg) {
  const fs::path p = cfg.paths.run_dir / "results.json";
  std::ifstream in(p);
  if (!in) throw Error("no results at " + p.string() + "; run 'evaluate' first");
  try {
    return Evaluation::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(p.string() + ": " + e.what());
  }
}

int cmd_synth(const Options& o) {
  RunConfig cfg = load_config(o);
  if (o.overwrite && fs::is_directory(cfg.paths.ecg_dir))
    for (const auto& p : list_segments(cfg.paths.ecg_dir)) {
      fs::path side = p;
      side.replace_extension(".json");
      fs::remove(p);
      fs::remove(side);
    }
  log("writing " + std::to_string(cfg.synth.n_patients + cfg.synth.n_noisy_patients) + " synthetic patients to " +
      cfg.paths.ecg_dir.string());
  write_synth_cohort(cfg);
  return 0;
}

int cmd_preprocess(const Options& o) {
  RunConfig cfg = load_config(o);
  const auto rows = preprocess_cohort(index_cohort(cfg.paths), cfg);
  write_preprocess_csv(cfg.paths.run_dir / "preprocess.csv", rows);
  write_manifest(cfg.paths.run_dir, cfg.to_json(), nullptr, "preprocess");
  return 0;
}

int cmd_features(const Options& o) {
  RunConfig cfg = load_config(o);
  const CohortIndex cohort = index_cohort(cfg.paths);
  const auto hours = compute_hours(cfg, cohort);
  const Dataset d = assemble_dataset(hours, cohort.meta, cohort.events);
  write_dataset_csv(cfg.paths.run_dir / "dataset.csv", d);
  auto dict = open(cfg.paths.run_dir / "data_dictionary.csv");
  write_data_dictionary(dict);
  dict.close();
  auto summary = open(cfg.paths.run_dir / "dataset_summary.json");
  summary << DatasetSummary::of(d).to_json().dump(2) << '\n';
  summary.close();
  log(std::to_string(d.patients.size()) + " patients, " + std::to_string(d.rows.size()) + " passing windows");
  write_manifest(cfg.paths.run_dir, cfg.to_json(), nullptr, "features");
  return 0;
}

int cmd_detect_local(const Options& o) {
  RunConfig cfg = load_config(o);
  const LocalRun run = run_local(index_cohort(cfg.paths), cfg);
  write_detections_csv(cfg.paths.run_dir / "detections.csv", run);
  auto t3 = open(cfg.paths.run_dir / "table3.csv");
  write_table3(t3, run.osorio15, run.osorio30);
  t3.close();
  write_manifest(cfg.paths.run_dir, cfg.to_json(), nullptr, "detect-local");
  return 0;
}

int cmd_train(const Options& o) {
  RunConfig cfg = load_config(o);
  const Dataset d = dataset_for(cfg);
  fs::create_directories(cfg.paths.run_dir / "models");
  for (Variant v : cfg.variants) {
    log("training " + std::string(to_string(v)));
    const TrainedModel m = train_final(d, v, cfg.ml, cfg.seed);
    auto out = open(cfg.paths.run_dir / "models" / ("final_" + variant_slug(v) + ".json"));
    out << m.to_json().dump() << '\n';
  }
  write_manifest(cfg.paths.run_dir, cfg.to_json(), nullptr, "train");
  return 0;
}

int cmd_evaluate(const Options& o) {
  RunConfig cfg = load_config(o);
  const Dataset d = dataset_for(cfg);
  const Evaluation e = evaluate(d, cfg);
  {
    auto out = open(cfg.paths.run_dir / "results.json");
    out << e.to_json().dump(1) << '\n';
  }
  write_split_models(e, cfg.paths.run_dir);
  emit_reports(e, cfg.ml.scenario_k, cfg.paths.run_dir);
  write_manifest(cfg.paths.run_dir, cfg.to_json(), &e, "evaluate");
  for (const auto& r : e.reports) {
    const Stat s = r.test_auroc();
    log(std::string(to_string(r.variant)) + ": test AUROC " + format_double(s.mean) + " (sd " + format_double(s.std) +
        ", " + std::to_string(s.n) + " splits)");
  }
  for (const auto& w : e.warnings) log("warning: " + w);
  return 0;
}

int cmd_scenario(const Options& o) {
  RunConfig cfg = load_config(o);
  const Evaluation e = load_results(cfg);
  const auto rows = scenario_table(e.reports, cfg.ml.scenario_k);
  auto out = open(cfg.paths.run_dir / "scenario.csv");
  write_scenario(out, rows);
  write_scenario(std::cout, rows);
  return 0;
}

int cmd_report(const Options& o) {
  RunConfig cfg = load_config(o);
  const Evaluation e = load_results(cfg);
  emit_reports(e, cfg.ml.scenario_k, cfg.paths.run_dir);
  write_manifest(cfg.paths.run_dir, cfg.to_json(), &e, "report");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seizure-risk triage from ECG: synthetic cohorts, features, local detector and triage models"};
  app.require_subcommand(1);
  Options o;

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Sub subs[] = {
      {"synth", "generate a synthetic cohort at the configured paths", cmd_synth},
      {"preprocess", "filter, detect beats and score signal quality per segment", cmd_preprocess},
      {"features", "extract per-window HRV and morphology features", cmd_features},
      {"detect-local", "run the heart-rate seizure detector and score it against annotations", cmd_detect_local},
      {"train", "fit each configured model variant on every patient", cmd_train},
      {"evaluate", "run the repeated-split experiment and write all reports", cmd_evaluate},
      {"scenario", "recompute the top-k monitoring scenario from stored results", cmd_scenario},
      {"report", "rewrite the report tables from stored results", cmd_report},
  };
  int (*chosen)(const Options&) = nullptr;
  for (const auto& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("-c,--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sc->add_option("--seed", o.seed, "override the master seed");
    sc->add_option("--run-dir", o.run_dir, "override the output directory");
    sc->add_option("-j,--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    sc->add_flag("-q,--quiet", o.quiet, "no progress messages");
    if (std::string(s.name) == "synth")
      sc->add_flag("--overwrite", o.overwrite, "replace existing segment files");
    sc->callback([&chosen, &s] { chosen = s.run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }
  g_quiet = o.quiet;
  try {
    return chosen(o);
  } catch (const Error& e) {
    std::cerr << "triage: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "triage: unexpected error: " << e.what() << '\n';
    return 1;
  }
}
