#include "triage/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "triage/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace triage {

namespace {

// Reads the keys of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(label() + "." + key + ": wrong type");
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_.empty() ? key : path_ + "." + key);
  }

  const json& at(const char* key) const { return j_.at(key); }
  std::string label() const { return path_.empty() ? "config" : path_; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + (path_.empty() ? k : path_ + "." + k) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_band(Section s, BandpassConfig& b) {
  s.get("order", b.order);
  s.get("f_lo_hz", b.f_lo_hz);
  s.get("f_hi_hz", b.f_hi_hz);
  s.get("pad_s", b.pad_s);
  s.finish();
}

json band_json(const BandpassConfig& b) {
  return {{"order", b.order}, {"f_lo_hz", b.f_lo_hz}, {"f_hi_hz", b.f_hi_hz}, {"pad_s", b.pad_s}};
}

template <typename F>
auto wrap(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void RunConfig::resolve_paths(const fs::path& base) {
  for (fs::path* p : {&paths.ecg_dir, &paths.annotations, &paths.metadata, &paths.run_dir})
    if (p->is_relative()) *p = base / *p;
}

void RunConfig::validate() const {
  require(workers >= 1, "workers must be >= 1");
  require(synth.n_patients >= 1 && synth.n_positive >= 0 && synth.n_positive <= synth.n_patients,
          "synth: need 0 <= n_positive <= n_patients");
  require(synth.n_noisy_patients >= 0, "synth.n_noisy_patients must be >= 0");
  require(synth.hours_min >= 1 && synth.hours_max >= synth.hours_min, "synth: need 1 <= hours_min <= hours_max");
  require(synth.segment_s > 0 && synth.fs > 0, "synth: segment_s and fs must be positive");
  require(synth.noisy_hour_rate >= 0 && synth.noisy_hour_rate <= 1, "synth.noisy_hour_rate must lie in [0, 1]");
  require(features.window_s > 0 && features.max_windows >= 1, "features: window_s and max_windows must be positive");
  require(features.min_coverage > 0 && features.min_coverage <= 1, "features.min_coverage must lie in (0, 1]");
  require(features.gate >= 0 && features.gate <= 1, "features.gate must lie in [0, 1]");
  require(splits.n >= 1, "splits.n must be >= 1");
  require(splits.test_frac > 0 && splits.test_frac < 1, "splits.test_frac must lie in (0, 1)");
  require(ml.n_trees >= 1, "ml.n_trees must be >= 1");
  require(ml.rfe_target >= 1, "ml.rfe_target must be >= 1");
  require(ml.search_folds >= 2, "ml.search.folds must be >= 2");
  require(ml.search_budget >= 5, "ml.search.budget must be >= 5");
  require(ml.search_initial >= 1 && ml.search_initial <= ml.search_budget, "ml.search.initial must lie in [1, budget]");
  require(ml.scenario_k >= 1, "ml.scenario_k must be >= 1");
  require(!ml.space.depths.empty() && !ml.space.criteria.empty() && !ml.space.fractions.empty(),
          "ml.search: empty search space");
  for (int d : ml.space.depths) require(d >= 1, "ml.search.depths must be >= 1");
  for (double f : ml.space.fractions) require(f > 0 && f <= 1, "ml.search.fractions must lie in (0, 1]");
  require(ml.rfe_hyper.depth >= 1, "ml.rfe.depth must be >= 1");
  require(ml.rfe_hyper.feature_fraction > 0 && ml.rfe_hyper.feature_fraction <= 1,
          "ml.rfe.feature_fraction must lie in (0, 1]");
  require(!variants.empty(), "variants must not be empty");
  for (double f : curve.fractions) require(f > 0 && f <= 1, "learning_curve.fractions must lie in (0, 1]");
  require(local.osorio.rise15 > 0 && local.osorio.rise30 > 0 && local.osorio.sustain_s >= 0,
          "local: rises must be positive");
  require(local.osorio.baseline.window_s > 0, "local.baseline_window_s must be positive");
  require(local.pre_s >= 0 && local.post_s >= 0, "local: pre_s and post_s must be >= 0");
}

json RunConfig::to_json() const {
  json variants_j = json::array();
  for (Variant v : variants) variants_j.push_back(std::string(to_string(v)));
  json criteria = json::array();
  for (Criterion c : ml.space.criteria) criteria.push_back(std::string(to_string(c)));
  return {
      {"seed", seed},
      {"workers", workers},
      {"paths",
       {{"ecg_dir", paths.ecg_dir.generic_string()},
        {"annotations", paths.annotations.generic_string()},
        {"metadata", paths.metadata.generic_string()},
        {"run_dir", paths.run_dir.generic_string()}}},
      {"synth",
       {{"n_patients", synth.n_patients},
        {"n_positive", synth.n_positive},
        {"n_noisy_patients", synth.n_noisy_patients},
        {"hours_min", synth.hours_min},
        {"hours_max", synth.hours_max},
        {"segment_s", synth.segment_s},
        {"noisy_hour_rate", synth.noisy_hour_rate},
        {"fs", synth.fs},
        {"effect", synth.effect},
        {"format", ecg_format == EcgFormat::binary ? "binary" : "csv"}}},
      {"features",
       {{"window_s", features.window_s},
        {"max_windows", features.max_windows},
        {"min_coverage", features.min_coverage},
        {"sqi_window_s", features.sqi_window_s},
        {"gate", features.gate},
        {"detect_band", band_json(features.detect_band)},
        {"morph_band", band_json(features.morph_band)},
        {"nn",
         {{"rr_min_ms", features.nn.rr_min_ms},
          {"rr_max_ms", features.nn.rr_max_ms},
          {"ma_window", features.nn.ma_window},
          {"ma_deviation_pct", features.nn.ma_deviation_pct},
          {"quotient_lo", features.nn.quotient_lo},
          {"quotient_hi", features.nn.quotient_hi}}}}},
      {"splits", {{"n", splits.n}, {"test_frac", splits.test_frac}}},
      {"ml",
       {{"n_trees", ml.n_trees},
        {"rfe_target", ml.rfe_target},
        {"rfe",
         {{"depth", ml.rfe_hyper.depth},
          {"criterion", std::string(to_string(ml.rfe_hyper.criterion))},
          {"feature_fraction", ml.rfe_hyper.feature_fraction}}},
        {"search",
         {{"folds", ml.search_folds},
          {"budget", ml.search_budget},
          {"initial", ml.search_initial},
          {"depths", ml.space.depths},
          {"criteria", criteria},
          {"fractions", ml.space.fractions}}},
        {"scenario_k", ml.scenario_k}}},
      {"variants", variants_j},
      {"learning_curve",
       {{"enabled", curve.enabled}, {"variant", std::string(to_string(curve.variant))}, {"fractions", curve.fractions}}},
      {"local",
       {{"rise15", local.osorio.rise15},
        {"rise30", local.osorio.rise30},
        {"sustain_s", local.osorio.sustain_s},
        {"baseline_window_s", local.osorio.baseline.window_s},
        {"sqi_window_s", local.sqi_window_s},
        {"gate", local.gate},
        {"pre_s", local.pre_s},
        {"post_s", local.post_s}}},
  };
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Section root(j, "");
  root.get("seed", c.seed);
  root.get("workers", c.workers);
  {
    auto s = root.sub("paths");
    std::string v;
    for (auto [key, dst] : {std::pair{"ecg_dir", &c.paths.ecg_dir}, std::pair{"annotations", &c.paths.annotations},
                            std::pair{"metadata", &c.paths.metadata}, std::pair{"run_dir", &c.paths.run_dir}}) {
      if (s.has(key)) {
        s.get(key, v);
        *dst = v;
      }
    }
    s.finish();
  }
  {
    auto s = root.sub("synth");
    s.get("n_patients", c.synth.n_patients);
    s.get("n_positive", c.synth.n_positive);
    s.get("n_noisy_patients", c.synth.n_noisy_patients);
    s.get("hours_min", c.synth.hours_min);
    s.get("hours_max", c.synth.hours_max);
    s.get("segment_s", c.synth.segment_s);
    s.get("noisy_hour_rate", c.synth.noisy_hour_rate);
    s.get("fs", c.synth.fs);
    s.get("effect", c.synth.effect);
    std::string fmt = "binary";
    s.get("format", fmt);
    if (fmt != "binary" && fmt != "csv") throw ConfigError("synth.format must be 'binary' or 'csv'");
    c.ecg_format = fmt == "binary" ? EcgFormat::binary : EcgFormat::csv;
    s.finish();
  }
  {
    auto s = root.sub("features");
    s.get("window_s", c.features.window_s);
    s.get("max_windows", c.features.max_windows);
    s.get("min_coverage", c.features.min_coverage);
    s.get("sqi_window_s", c.features.sqi_window_s);
    s.get("gate", c.features.gate);
    read_band(s.sub("detect_band"), c.features.detect_band);
    read_band(s.sub("morph_band"), c.features.morph_band);
    auto nn = s.sub("nn");
    nn.get("rr_min_ms", c.features.nn.rr_min_ms);
    nn.get("rr_max_ms", c.features.nn.rr_max_ms);
    nn.get("ma_window", c.features.nn.ma_window);
    nn.get("ma_deviation_pct", c.features.nn.ma_deviation_pct);
    nn.get("quotient_lo", c.features.nn.quotient_lo);
    nn.get("quotient_hi", c.features.nn.quotient_hi);
    nn.finish();
    s.finish();
  }
  {
    auto s = root.sub("splits");
    s.get("n", c.splits.n);
    s.get("test_frac", c.splits.test_frac);
    s.finish();
  }
  {
    auto s = root.sub("ml");
    s.get("n_trees", c.ml.n_trees);
    s.get("rfe_target", c.ml.rfe_target);
    s.get("scenario_k", c.ml.scenario_k);
    auto rfe = s.sub("rfe");
    rfe.get("depth", c.ml.rfe_hyper.depth);
    std::string crit(to_string(c.ml.rfe_hyper.criterion));
    rfe.get("criterion", crit);
    c.ml.rfe_hyper.criterion = wrap("ml.rfe.criterion", [&] { return parse_criterion(crit); });
    rfe.get("feature_fraction", c.ml.rfe_hyper.feature_fraction);
    rfe.finish();
    auto search = s.sub("search");
    search.get("folds", c.ml.search_folds);
    search.get("budget", c.ml.search_budget);
    search.get("initial", c.ml.search_initial);
    search.get("depths", c.ml.space.depths);
    search.get("fractions", c.ml.space.fractions);
    if (search.has("criteria")) {
      std::vector<std::string> names;
      search.get("criteria", names);
      c.ml.space.criteria.clear();
      for (const auto& n : names)
        c.ml.space.criteria.push_back(wrap("ml.search.criteria", [&] { return parse_criterion(n); }));
    }
    search.finish();
    s.finish();
  }
  if (root.has("variants")) {
    std::vector<std::string> names;
    root.get("variants", names);
    c.variants.clear();
    for (const auto& n : names) c.variants.push_back(wrap("variants", [&] { return parse_variant(n); }));
  }
  {
    auto s = root.sub("learning_curve");
    s.get("enabled", c.curve.enabled);
    std::string v(to_string(c.curve.variant));
    s.get("variant", v);
    c.curve.variant = wrap("learning_curve.variant", [&] { return parse_variant(v); });
    s.get("fractions", c.curve.fractions);
    s.finish();
  }
  {
    auto s = root.sub("local");
    s.get("rise15", c.local.osorio.rise15);
    s.get("rise30", c.local.osorio.rise30);
    s.get("sustain_s", c.local.osorio.sustain_s);
    s.get("baseline_window_s", c.local.osorio.baseline.window_s);
    s.get("sqi_window_s", c.local.sqi_window_s);
    s.get("gate", c.local.gate);
    s.get("pre_s", c.local.pre_s);
    s.get("post_s", c.local.post_s);
    s.finish();
  }
  root.finish();
  c.local.band = c.features.detect_band;
  c.local.primary = c.features.primary;
  c.local.secondary = c.features.secondary;
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig c = from_json(j);
  c.resolve_paths(fs::absolute(path).parent_path());
  return c;
}

}  // namespace triage
