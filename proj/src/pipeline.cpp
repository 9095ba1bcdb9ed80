#include "triage/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "io_util.hpp"
#include "triage/errors.hpp"
#include "triage/parallel.hpp"
#include "triage/seeds.hpp"
#include "triage/sqi.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace triage {

namespace {

using namespace io;

bool is_segment_file(const fs::path& p) {
  const auto ext = p.extension();
  return ext == ".bin" || ext == ".csv" || ext == ".json";
}

json split_json(const SplitResult& s) {
  return {{"index", s.index},
          {"ok", s.ok},
          {"error", s.error},
          {"train_auroc", s.train_auroc},
          {"test_auroc", s.test_auroc},
          {"scenario_ppv", s.scenario_ppv},
          {"test_patients", s.test_patients},
          {"test_scores", s.test_scores},
          {"test_labels", s.test_labels},
          {"selected", s.ok ? s.model.selected_names() : std::vector<std::string>{}},
          {"importance", s.importance}};
}

// The report path only needs the selected names, so they are kept on a bare
// model shell: columns hold the names and selected indexes them in order.
SplitResult split_from_json(const json& j) {
  SplitResult s;
  s.index = j.at("index").get<int>();
  s.ok = j.at("ok").get<bool>();
  s.error = j.at("error").get<std::string>();
  s.train_auroc = j.at("train_auroc").get<double>();
  s.test_auroc = j.at("test_auroc").get<double>();
  s.scenario_ppv = j.at("scenario_ppv").get<double>();
  s.test_patients = j.at("test_patients").get<std::vector<std::string>>();
  s.test_scores = j.at("test_scores").get<std::vector<double>>();
  s.test_labels = j.at("test_labels").get<std::vector<int>>();
  s.model.columns = j.at("selected").get<std::vector<std::string>>();
  s.model.selected.resize(s.model.columns.size());
  for (std::size_t i = 0; i < s.model.selected.size(); ++i) s.model.selected[i] = static_cast<int>(i);
  s.importance = j.at("importance").get<std::vector<double>>();
  return s;
}

json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}, {"n", s.n}}; }
Stat stat_from_json(const json& j) {
  Stat s;
  s.mean = j.at("mean").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("mean").get<double>();
  s.std = j.at("std").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("std").get<double>();
  s.n = j.at("n").get<int>();
  return s;
}

}  // namespace

std::vector<EcgRecord> CohortIndex::load_patient(std::size_t i) const {
  std::vector<EcgRecord> out;
  for (const auto& p : segments.at(i)) out.push_back(read_segment(p));
  std::sort(out.begin(), out.end(), [](const EcgRecord& a, const EcgRecord& b) {
    return std::tie(a.start_offset, a.segment_id) < std::tie(b.start_offset, b.segment_id);
  });
  return out;
}

CohortIndex index_cohort(const PathsConfig& paths) {
  CohortIndex c;
  for (auto& [pid, list] : segments_by_patient(paths.ecg_dir)) {
    c.patients.push_back(pid);
    c.segments.push_back(list);
  }
  c.events = read_annotations(paths.annotations);
  c.meta = read_metadata(paths.metadata);
  const auto known = [&](const std::string& id) { return std::binary_search(c.patients.begin(), c.patients.end(), id); };
  for (const auto& e : c.events)
    if (!known(e.patient_id)) throw IntegrityError("annotation references unknown patient '" + e.patient_id + "'");
  std::set<std::string> seen;
  for (const auto& m : c.meta) {
    if (!known(m.patient_id)) throw IntegrityError("metadata row references unknown patient '" + m.patient_id + "'");
    if (!seen.insert(m.patient_id).second) throw IntegrityError("duplicate metadata row for '" + m.patient_id + "'");
  }
  return c;
}

void write_synth_cohort(const RunConfig& cfg) {
  const auto plan = plan_cohort(cfg.synth, cfg.seed);
  fs::create_directories(cfg.paths.ecg_dir);
  for (const auto& entry : fs::directory_iterator(cfg.paths.ecg_dir))
    if (is_segment_file(entry.path()))
      throw Error("ECG directory already holds segment files: " + cfg.paths.ecg_dir.string());
  for (const auto& p : plan)
    for (const auto& r : synth_patient_records(p, cfg.synth, cfg.seed)) write_segment(cfg.paths.ecg_dir, r, cfg.ecg_format);
  const Cohort tables = plan_tables(plan);
  for (const fs::path& f : {cfg.paths.annotations, cfg.paths.metadata})
    if (f.has_parent_path()) fs::create_directories(f.parent_path());
  write_annotations(cfg.paths.annotations, tables.events);
  write_metadata(cfg.paths.metadata, tables.meta);
}

std::vector<HourFeatures> extract_features(const CohortIndex& cohort, const FeatureConfig& cfg, int workers) {
  return extract_streamed(cohort.patients.size(), [&](std::size_t i) { return cohort.load_patient(i); }, cfg,
                          workers);
}

std::vector<SegmentSummary> preprocess_cohort(const CohortIndex& cohort, const RunConfig& cfg) {
  std::vector<std::vector<SegmentSummary>> per(cohort.patients.size());
  parallel_for(per.size(), cfg.workers, [&](std::size_t i) {
    for (const auto& r : cohort.load_patient(i)) {
      SegmentSummary s;
      s.patient_id = r.patient_id;
      s.segment_id = r.segment_id;
      s.start_offset = r.start_offset;
      s.duration_s = r.duration();
      const EcgRecord f = bandpass(r, cfg.features.detect_band);
      const BeatSeries a = detect_rpeaks_primary(f, cfg.features.primary);
      const BeatSeries b = detect_rpeaks_secondary(f, cfg.features.secondary);
      s.beats_primary = a.size();
      s.beats_secondary = b.size();
      s.nn_intervals = filter_nn(refine_rpeaks(r, a), cfg.features.nn).size();
      const SqiSeries sqi = windowed_sqi(r, a, b, cfg.features.sqi_window_s);
      s.bsqi_mean = sqi.mean();
      s.sqi_windows = sqi.size();
      s.sqi_windows_passing = static_cast<std::size_t>(
          std::count_if(sqi.bsqi.begin(), sqi.bsqi.end(), [&](double q) { return q >= cfg.features.gate; }));
      per[i].push_back(std::move(s));
    }
  });
  std::vector<SegmentSummary> out;
  for (auto& p : per) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void write_preprocess_csv(const fs::path& path, const std::vector<SegmentSummary>& rows) {
  auto out = open_out(path);
  out << "patient_id,segment_id,start_offset_s,duration_s,beats_primary,beats_secondary,nn_intervals,bsqi_mean,"
         "sqi_windows,sqi_windows_passing\n";
  for (const auto& s : rows)
    out << s.patient_id << ',' << s.segment_id << ',' << format_double(s.start_offset) << ','
        << format_double(s.duration_s) << ',' << s.beats_primary << ',' << s.beats_secondary << ',' << s.nn_intervals
        << ',' << format_double(s.bsqi_mean) << ',' << s.sqi_windows << ',' << s.sqi_windows_passing << '\n';
}

LocalRun run_local(const CohortIndex& cohort, const RunConfig& cfg) {
  std::vector<std::vector<LocalRecordResult>> per(cohort.patients.size());
  parallel_for(per.size(), cfg.workers, [&](std::size_t i) {
    for (const auto& r : cohort.load_patient(i)) per[i].push_back(detect_local(r, cfg.local));
  });
  std::map<std::string, std::vector<SeizureEvent>> events_of;
  for (const auto& e : cohort.events) events_of[e.patient_id].push_back(e);
  LocalRun run;
  for (std::size_t i = 0; i < per.size(); ++i) {
    std::vector<Detection> d15, d30;
    for (auto& rec : per[i]) {
      d15.insert(d15.end(), rec.osorio15.begin(), rec.osorio15.end());
      d30.insert(d30.end(), rec.osorio30.begin(), rec.osorio30.end());
      run.records.push_back(std::move(rec));
    }
    const auto& refs = events_of[cohort.patients[i]];
    run.osorio15 += match_events(d15, refs, cfg.local.pre_s, cfg.local.post_s);
    run.osorio30 += match_events(d30, refs, cfg.local.pre_s, cfg.local.post_s);
  }
  run.osorio15.finalize();
  run.osorio30.finalize();
  return run;
}

void write_detections_csv(const fs::path& path, const LocalRun& run) {
  auto out = open_out(path);
  out << "patient_id,segment_id,mode,t_s,t_end_s,suppressed\n";
  for (const auto& r : run.records)
    for (const auto* list : {&r.osorio15, &r.osorio30})
      for (const auto& d : *list)
        out << r.patient_id << ',' << r.segment_id << ',' << to_string(d.mode) << ',' << format_double(d.t) << ','
            << format_double(d.t_end) << ',' << (d.suppressed ? 1 : 0) << '\n';
}

void write_dataset_csv(const fs::path& path, const Dataset& data) {
  auto out = open_out(path);
  out << "patient_id,hour_index,label,bsqi";
  for (const auto& n : data.names) out << ',' << n;
  out << '\n';
  for (const auto& r : data.rows) {
    out << r.patient_id << ',' << r.hour_index << ',' << r.label << ',' << format_double(r.bsqi);
    for (double v : r.values) out << ',' << (std::isnan(v) ? std::string() : format_double(v));
    out << '\n';
  }
}

Dataset permute_labels(Dataset data, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "permute"));
  portable_shuffle(rng, data.labels);
  for (auto& row : data.rows) row.label = data.labels[data.patient_index(row.patient_id)];
  return data;
}

TrainedModel train_final(const Dataset& data, Variant variant, const MlConfig& cfg, std::uint64_t seed) {
  std::vector<std::size_t> rows(data.rows.size());
  std::vector<int> y, groups;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows[r] = r;
    y.push_back(data.rows[r].label);
    groups.push_back(static_cast<int>(data.patient_index(data.rows[r].patient_id)));
  }
  return fit_model(data.matrix(rows, variant_columns(variant)), y, groups, variant, cfg,
                   derive_seed(seed, "final", static_cast<std::uint64_t>(variant)));
}

DatasetSummary DatasetSummary::of(const Dataset& data) {
  DatasetSummary s;
  s.patients = data.patients;
  s.labels = data.labels;
  for (std::size_t p = 0; p < data.patients.size(); ++p) s.ages.push_back(data.rows[data.first_row[p]].values[0]);
  s.rows = data.rows.size();
  s.positive_rows = data.positive_rows();
  s.dropped = data.dropped;
  s.late_first = data.late_first;
  return s;
}

json DatasetSummary::to_json() const {
  json ages_j = json::array();
  for (double a : ages) ages_j.push_back(std::isnan(a) ? json(nullptr) : json(a));
  return {{"patients", patients}, {"labels", labels}, {"ages", ages_j},           {"rows", rows},
          {"positive_rows", positive_rows}, {"dropped", dropped}, {"late_first", late_first}};
}

DatasetSummary DatasetSummary::from_json(const json& j) {
  DatasetSummary s;
  s.patients = j.at("patients").get<std::vector<std::string>>();
  s.labels = j.at("labels").get<std::vector<int>>();
  for (const auto& a : j.at("ages")) s.ages.push_back(a.is_null() ? std::numeric_limits<double>::quiet_NaN() : a.get<double>());
  s.rows = j.at("rows").get<std::size_t>();
  s.positive_rows = j.at("positive_rows").get<std::size_t>();
  s.dropped = j.at("dropped").get<std::vector<std::string>>();
  s.late_first = j.at("late_first").get<std::vector<std::string>>();
  return s;
}

json Evaluation::to_json() const {
  json splits = json::array();
  for (const auto& s : plan.splits) splits.push_back({{"seed", s.seed}, {"train", s.train}, {"test", s.test}});
  json reports_j = json::array();
  for (const auto& r : reports) {
    json sp = json::array();
    for (const auto& s : r.splits) sp.push_back(split_json(s));
    reports_j.push_back({{"variant", std::string(to_string(r.variant))}, {"splits", sp}});
  }
  json curve_j = json::array();
  for (const auto& c : curve)
    curve_j.push_back({{"fraction", c.fraction}, {"train_patients", c.train_patients}, {"test_auroc", stat_json(c.test_auroc)}});
  return {{"format", "triage-evaluation"},
          {"version", 1},
          {"seed", seed},
          {"plan", {{"seed", plan.seed}, {"splits", splits}}},
          {"dataset", dataset.to_json()},
          {"variants", reports_j},
          {"learning_curve",
           {{"enabled", curve_enabled}, {"variant", std::string(to_string(curve_variant))}, {"points", curve_j}}},
          {"warnings", warnings}};
}

Evaluation Evaluation::from_json(const json& j) {
  try {
    if (j.at("format") != "triage-evaluation" || j.at("version") != 1)
      throw SchemaError("not a version-1 evaluation file");
    Evaluation e;
    e.seed = j.at("seed").get<std::uint64_t>();
    e.plan.seed = j.at("plan").at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("plan").at("splits"))
      e.plan.splits.push_back({s.at("seed").get<std::uint64_t>(), s.at("train").get<std::vector<std::string>>(),
                               s.at("test").get<std::vector<std::string>>()});
    e.dataset = DatasetSummary::from_json(j.at("dataset"));
    for (const auto& r : j.at("variants")) {
      VariantReport rep;
      rep.variant = parse_variant(r.at("variant").get<std::string>());
      for (const auto& s : r.at("splits")) rep.splits.push_back(split_from_json(s));
      e.reports.push_back(std::move(rep));
    }
    const auto& lc = j.at("learning_curve");
    e.curve_enabled = lc.at("enabled").get<bool>();
    e.curve_variant = parse_variant(lc.at("variant").get<std::string>());
    for (const auto& p : lc.at("points"))
      e.curve.push_back({p.at("fraction").get<double>(), p.at("train_patients").get<double>(),
                         stat_from_json(p.at("test_auroc"))});
    e.warnings = j.at("warnings").get<std::vector<std::string>>();
    return e;
  } catch (const json::exception& ex) {
    throw SchemaError(std::string("evaluation file: ") + ex.what());
  }
}

Evaluation evaluate(const Dataset& data, const RunConfig& cfg) {
  Evaluation e;
  e.seed = cfg.seed;
  e.plan = make_splits(data.patients, data.labels, cfg.splits.n, cfg.splits.test_frac, cfg.seed);
  e.dataset = DatasetSummary::of(data);
  for (Variant v : cfg.variants) e.reports.push_back(run_variant(data, e.plan, v, cfg.ml, cfg.workers));
  e.curve_enabled = cfg.curve.enabled;
  e.curve_variant = cfg.curve.variant;
  if (cfg.curve.enabled)
    e.curve = learning_curve(data, e.plan, cfg.curve.variant, cfg.ml, cfg.curve.fractions, cfg.workers, e.warnings);
  for (const auto& r : e.reports)
    for (const auto& s : r.splits)
      if (!s.ok) e.warnings.push_back(std::string(to_string(r.variant)) + " split " + std::to_string(s.index) + ": " + s.error);
  return e;
}

}  // namespace triage
