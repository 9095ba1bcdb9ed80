#include "triage/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "triage/errors.hpp"
#include "triage/metrics.hpp"
#include "triage/parallel.hpp"
#include "triage/seeds.hpp"
#include "triage/stats.hpp"

namespace triage {

namespace {

Eigen::MatrixXd take_columns(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
  return out;
}

void fill_missing(Eigen::MatrixXd& X, const std::vector<double>& fill) {
  for (Eigen::Index c = 0; c < X.cols(); ++c)
    for (Eigen::Index r = 0; r < X.rows(); ++r)
      if (std::isnan(X(r, c))) X(r, c) = fill[static_cast<std::size_t>(c)];
}

std::pair<std::vector<std::string>, std::vector<std::string>> by_class(const std::vector<std::string>& ids,
                                                                     const Dataset& data) {
  std::vector<std::string> pos, neg;
  for (const auto& id : ids) (data.labels[data.patient_index(id)] ? pos : neg).push_back(id);
  return {pos, neg};
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::age: return "Age";
    case Variant::meta: return "META";
    case Variant::age_hrv_mor: return "Age+HRV+MOR";
    case Variant::meta_hrv_mor: return "META+HRV+MOR";
  }
  return "";
}

Variant parse_variant(std::string_view s) {
  for (Variant v : kVariants)
    if (to_string(v) == s) return v;
  throw ParameterError("unknown model variant '" + std::string(s) + "'");
}

std::vector<int> variant_columns(Variant v) {
  const int meta = static_cast<int>(PatientMeta::kFeatureCount);
  const int total = static_cast<int>(feature_names().size());
  std::vector<int> cols;
  const bool all_meta = v == Variant::meta || v == Variant::meta_hrv_mor;
  const bool ecg = v == Variant::age_hrv_mor || v == Variant::meta_hrv_mor;
  for (int c = 0; c < (all_meta ? meta : 1); ++c) cols.push_back(c);  // Age is column 0
  if (ecg)
    for (int c = meta; c < total; ++c) cols.push_back(c);
  return cols;
}

SplitPlan make_splits(const std::vector<std::string>& patients, const std::vector<int>& labels, int n,
                      double test_frac, std::uint64_t seed) {
  if (patients.size() != labels.size()) throw ParameterError("make_splits: patients/labels length mismatch");
  if (n < 1 || !(test_frac > 0.0 && test_frac < 1.0)) throw ParameterError("make_splits: bad split count or fraction");
  std::vector<std::string> pos, neg;
  for (std::size_t i = 0; i < patients.size(); ++i) (labels[i] ? pos : neg).push_back(patients[i]);
  if (pos.size() < 3 || neg.size() < 3)
    throw StratificationError("make_splits: need at least 3 patients per class (got " + std::to_string(pos.size()) +
                              " positive, " + std::to_string(neg.size()) + " negative)");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  const auto total = static_cast<double>(patients.size());
  const auto n_test = static_cast<std::size_t>(std::lround(test_frac * total));
  const auto n_test_pos =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(test_frac * static_cast<double>(pos.size()))), 1,
                              pos.size() - 1);
  const auto n_test_neg = std::clamp<std::size_t>(n_test > n_test_pos ? n_test - n_test_pos : 1, 1, neg.size() - 1);

  SplitPlan plan;
  plan.seed = seed;
  for (int s = 0; s < n; ++s) {
    Split sp;
    sp.seed = derive_seed(seed, "split", static_cast<std::uint64_t>(s));
    std::mt19937_64 rng(sp.seed);
    auto p = pos, q = neg;
    portable_shuffle(rng, p);
    portable_shuffle(rng, q);
    sp.test.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n_test_pos));
    sp.test.insert(sp.test.end(), q.begin(), q.begin() + static_cast<std::ptrdiff_t>(n_test_neg));
    sp.train.assign(p.begin() + static_cast<std::ptrdiff_t>(n_test_pos), p.end());
    sp.train.insert(sp.train.end(), q.begin() + static_cast<std::ptrdiff_t>(n_test_neg), q.end());
    std::sort(sp.test.begin(), sp.test.end());
    std::sort(sp.train.begin(), sp.train.end());
    plan.splits.push_back(std::move(sp));
  }
  return plan;
}

Eigen::VectorXd TrainedModel::score(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd Xs = scaler.transform(X);
  fill_missing(Xs, impute);
  return predict_proba(forest, take_columns(Xs, selected));
}

std::vector<std::string> TrainedModel::selected_names() const {
  std::vector<std::string> out;
  for (int c : selected) out.push_back(columns[static_cast<std::size_t>(c)]);
  return out;
}

nlohmann::json TrainedModel::to_json() const {
  return {{"format", "triage-model"},
          {"version", kFormatVersion},
          {"variant", std::string(to_string(variant))},
          {"columns", columns},
          {"scaler", scaler.to_json()},
          {"impute", impute},
          {"selected", selected},
          {"selected_names", selected_names()},
          {"cv_auroc", cv_auroc},
          {"forest", forest.to_json()}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "triage-model") throw SchemaError("model artifact: unknown format");
    if (j.at("version").get<int>() != kFormatVersion) throw SchemaError("model artifact: unsupported version");
    TrainedModel m;
    m.variant = parse_variant(j.at("variant").get<std::string>());
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.scaler = MinMaxScaler::from_json(j.at("scaler"));
    m.impute = j.at("impute").get<std::vector<double>>();
    m.selected = j.at("selected").get<std::vector<int>>();
    m.cv_auroc = j.at("cv_auroc").get<double>();
    m.forest = Forest::from_json(j.at("forest"));
    if (m.impute.size() != m.columns.size() || static_cast<std::size_t>(m.scaler.min().size()) != m.columns.size() ||
        static_cast<std::size_t>(m.forest.n_features) != m.selected.size())
      throw SchemaError("model artifact: inconsistent column counts");
    for (int c : m.selected)
      if (c < 0 || static_cast<std::size_t>(c) >= m.columns.size()) throw SchemaError("model artifact: bad selection");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model artifact: ") + e.what());
  }
}

TrainedModel fit_model(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& groups,
                       Variant variant, const MlConfig& cfg, std::uint64_t seed) {
  TrainedModel m;
  m.variant = variant;
  for (int c : variant_columns(variant)) m.columns.push_back(feature_names()[static_cast<std::size_t>(c)]);
  if (static_cast<std::size_t>(X.cols()) != m.columns.size())
    throw SchemaError("fit_model: expected " + std::to_string(m.columns.size()) + " columns for " +
                      std::string(to_string(variant)));

  Eigen::MatrixXd Xs = m.scaler.fit_transform(X);
  m.impute.assign(static_cast<std::size_t>(Xs.cols()), 0.0);
  for (Eigen::Index c = 0; c < Xs.cols(); ++c) {
    std::vector<double> present;
    for (Eigen::Index r = 0; r < Xs.rows(); ++r)
      if (!std::isnan(Xs(r, c))) present.push_back(Xs(r, c));
    if (!present.empty()) m.impute[static_cast<std::size_t>(c)] = median(std::move(present));
  }
  fill_missing(Xs, m.impute);

  if (Xs.cols() > cfg.rfe_target) {
    Hyper h = cfg.rfe_hyper;
    h.n_trees = cfg.n_trees;
    m.selected = rfe(Xs, y, cfg.rfe_target, h, derive_seed(seed, "rfe")).selected;
  } else {
    m.selected.resize(static_cast<std::size_t>(Xs.cols()));
    std::iota(m.selected.begin(), m.selected.end(), 0);
  }
  const Eigen::MatrixXd Xsel = take_columns(Xs, m.selected);

  SearchConfig sc;
  sc.folds = cfg.search_folds;
  sc.budget = cfg.search_budget;
  sc.initial = cfg.search_initial;
  sc.n_trees = cfg.n_trees;
  const SearchResult best = bayes_search(Xsel, y, groups, cfg.space, sc, derive_seed(seed, "search"));
  m.cv_auroc = best.best_score;
  m.forest = train_forest(Xsel, y, best.best, derive_seed(seed, "forest"));
  return m;
}

Stat summarize_stat(const std::vector<double>& v) {
  Stat s;
  s.n = static_cast<int>(v.size());
  if (v.empty()) {
    s.mean = s.std = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

namespace {
template <typename F>
Stat over_ok(const std::vector<SplitResult>& splits, F field) {
  std::vector<double> v;
  for (const auto& s : splits)
    if (s.ok) v.push_back(field(s));
  return summarize_stat(v);
}
}  // namespace

Stat VariantReport::train_auroc() const {
  return over_ok(splits, [](const SplitResult& s) { return s.train_auroc; });
}
Stat VariantReport::test_auroc() const {
  return over_ok(splits, [](const SplitResult& s) { return s.test_auroc; });
}
Stat VariantReport::scenario_ppv() const {
  return over_ok(splits, [](const SplitResult& s) { return s.scenario_ppv; });
}

SplitResult run_split(const Dataset& data, const Split& split, int index, Variant variant, const MlConfig& cfg) {
  SplitResult res;
  res.index = index;
  try {
    const std::vector<int> cols = variant_columns(variant);
    const std::set<std::string> train_ids(split.train.begin(), split.train.end());
    std::vector<std::size_t> train_rows;
    std::vector<int> y, groups;
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
      if (!train_ids.count(data.rows[r].patient_id)) continue;
      train_rows.push_back(r);
      y.push_back(data.rows[r].label);
      groups.push_back(static_cast<int>(data.patient_index(data.rows[r].patient_id)));
    }
    const Eigen::MatrixXd Xtr = data.matrix(train_rows, cols);
    res.model = fit_model(Xtr, y, groups, variant, cfg, derive_seed(split.seed, to_string(variant)));
    const Eigen::VectorXd str = res.model.score(Xtr);
    res.train_auroc = auroc({str.data(), static_cast<std::size_t>(str.size())}, y);

    std::vector<std::size_t> test_rows;
    for (const auto& id : split.test) {
      const std::size_t p = data.patient_index(id);
      test_rows.push_back(data.first_row[p]);
      res.test_patients.push_back(id);
      res.test_labels.push_back(data.labels[p]);
    }
    const Eigen::VectorXd ste = res.model.score(data.matrix(test_rows, cols));
    res.test_scores.assign(ste.data(), ste.data() + ste.size());
    res.test_auroc = auroc(res.test_scores, res.test_labels);
    res.scenario_ppv = scenario_ppv(res.test_scores, res.test_labels, res.test_patients, cfg.scenario_k);
    const Eigen::VectorXd imp = feature_importance(res.model.forest);
    res.importance.assign(imp.data(), imp.data() + imp.size());
    res.ok = true;
  } catch (const Error& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

VariantReport run_variant(const Dataset& data, const SplitPlan& plan, Variant variant, const MlConfig& cfg,
                          int workers) {
  VariantReport rep;
  rep.variant = variant;
  rep.splits.resize(plan.splits.size());
  parallel_for(plan.splits.size(), workers, [&](std::size_t s) {
    rep.splits[s] = run_split(data, plan.splits[s], static_cast<int>(s), variant, cfg);
  });
  return rep;
}

double scenario_ppv(const std::vector<double>& scores, const std::vector<int>& labels,
                    const std::vector<std::string>& patient_ids, int k) {
  if (scores.size() != labels.size() || scores.size() != patient_ids.size())
    throw ParameterError("scenario_ppv: length mismatch");
  if (k < 1 || static_cast<std::size_t>(k) > scores.size())
    throw ParameterError("scenario_ppv: k=" + std::to_string(k) + " exceeds " + std::to_string(scores.size()) +
                         " patients");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return patient_ids[a] < patient_ids[b];
  });
  int hits = 0;
  for (int i = 0; i < k; ++i) hits += labels[order[static_cast<std::size_t>(i)]];
  return static_cast<double>(hits) / k;
}

double random_allocation_ppv(int positives, int n) {
  if (n <= 0 || positives < 0 || positives > n) throw ParameterError("random_allocation_ppv: bad counts");
  return static_cast<double>(positives) / n;
}

double improvement(double p, double base) {
  if (base == 0.0) throw ParameterError("improvement: zero baseline");
  return p / base - 1.0;
}

Split subsample_split(const Split& split, const Dataset& data, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ParameterError("subsample_split: fraction outside (0, 1]");
  if (fraction == 1.0) return split;
  auto [pos, neg] = by_class(split.train, data);
  std::mt19937_64 rng(derive_seed(split.seed, "subsample"));
  portable_shuffle(rng, pos);
  portable_shuffle(rng, neg);
  pos.resize(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(pos.size()))));
  neg.resize(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(neg.size()))));
  Split out = split;
  out.train = pos;
  out.train.insert(out.train.end(), neg.begin(), neg.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

std::vector<CurvePoint> learning_curve(const Dataset& data, const SplitPlan& plan, Variant variant,
                                       const MlConfig& cfg, std::vector<double> fractions, int workers,
                                       std::vector<std::string>& warnings) {
  std::sort(fractions.begin(), fractions.end());
  fractions.erase(std::unique(fractions.begin(), fractions.end()), fractions.end());
  std::vector<CurvePoint> out;
  for (double f : fractions) {
    std::vector<Split> subs;
    bool too_small = false;
    for (const auto& sp : plan.splits) {
      Split sub = subsample_split(sp, data, f);
      const auto [pos, neg] = by_class(sub.train, data);
      if (pos.size() < 3 || neg.size() < 3) too_small = true;
      subs.push_back(std::move(sub));
    }
    if (too_small || subs.empty()) {
      warnings.push_back(std::string(to_string(variant)) + ": learning-curve fraction " + format_double(f) +
                         " leaves fewer than 3 training patients in a class; skipped");
      continue;
    }
    std::vector<SplitResult> results(subs.size());
    parallel_for(subs.size(), workers,
                 [&](std::size_t s) { results[s] = run_split(data, subs[s], static_cast<int>(s), variant, cfg); });
    CurvePoint pt;
    pt.fraction = f;
    pt.train_patients = static_cast<double>(subs.front().train.size());
    pt.test_auroc = over_ok(results, [](const SplitResult& s) { return s.test_auroc; });
    out.push_back(pt);
  }
  return out;
}

}  // namespace triage
