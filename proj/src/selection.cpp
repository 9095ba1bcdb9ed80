#include "triage/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "triage/errors.hpp"
#include "triage/metrics.hpp"
#include "triage/seeds.hpp"

namespace triage {

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
  return out;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

// Label per group, in ascending group-id order.
std::map<int, int> group_labels(const std::vector<int>& y, const std::vector<int>& groups) {
  if (y.size() != groups.size()) throw ParameterError("stratified_folds: labels/groups length mismatch");
  std::map<int, int> label;
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto [it, inserted] = label.emplace(groups[i], y[i]);
    if (!inserted && it->second != y[i])
      throw ParameterError("stratified_folds: group " + std::to_string(groups[i]) + " has mixed labels");
  }
  return label;
}

// Encodes a config as list positions scaled to [0, 1] per axis.
Eigen::Vector3d encode(const SearchSpace& space, std::size_t index) {
  const std::size_t nf = space.fractions.size(), nc = space.criteria.size(), nd = space.depths.size();
  const std::size_t pos[3] = {index / (nc * nf), (index / nf) % nc, index % nf};
  const std::size_t len[3] = {nd, nc, nf};
  Eigen::Vector3d e;
  for (int a = 0; a < 3; ++a) e(a) = len[a] > 1 ? static_cast<double>(pos[a]) / static_cast<double>(len[a] - 1) : 0.0;
  return e;
}

struct Gp {
  Eigen::MatrixXd train;  // 3 x m encoded points
  Eigen::VectorXd alpha;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double length = 1.0;
  double log_ml = -std::numeric_limits<double>::infinity();

  double kernel(const Eigen::Vector3d& a, const Eigen::Vector3d& b) const {
    return std::exp(-(a - b).squaredNorm() / (2.0 * length * length));
  }
};

constexpr double kJitter = 1e-6;
constexpr double kLengthGrid[] = {0.1, 0.2, 0.5, 1.0, 2.0};

Gp fit_gp(const Eigen::MatrixXd& pts, const Eigen::VectorXd& z) {
  Gp best;
  const Eigen::Index m = pts.cols();
  for (double ell : kLengthGrid) {
    Gp g;
    g.train = pts;
    g.length = ell;
    Eigen::MatrixXd K(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) K(i, j) = g.kernel(pts.col(i), pts.col(j)) + (i == j ? kJitter : 0.0);
    g.llt.compute(K);
    if (g.llt.info() != Eigen::Success) continue;
    g.alpha = g.llt.solve(z);
    const Eigen::MatrixXd L = g.llt.matrixL();
    g.log_ml = -0.5 * z.dot(g.alpha) - L.diagonal().array().log().sum();
    if (g.log_ml > best.log_ml) best = std::move(g);
  }
  if (!std::isfinite(best.log_ml)) throw Error("bayes_search: surrogate fit failed");
  return best;
}

double expected_improvement(double mu, double sigma, double best) {
  if (sigma < 1e-12) return std::max(0.0, mu - best);
  const double z = (mu - best) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return (mu - best) * cdf + sigma * pdf;
}

}  // namespace

std::vector<int> stratified_folds(const std::vector<int>& y, const std::vector<int>& groups, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw ParameterError("stratified_folds: need at least 2 folds");
  const auto label = group_labels(y, groups);
  std::vector<int> pos, neg;
  for (const auto& [g, l] : label) (l == 1 ? pos : neg).push_back(g);
  if (static_cast<int>(pos.size()) < k || static_cast<int>(neg.size()) < k)
    throw StratificationError("stratified_folds: " + std::to_string(pos.size()) + " positive / " +
                              std::to_string(neg.size()) + " negative groups cannot fill " + std::to_string(k) +
                              " folds");
  std::mt19937_64 rng(derive_seed(seed, "folds"));
  portable_shuffle(rng, pos);
  portable_shuffle(rng, neg);
  std::map<int, int> fold_of;
  std::size_t slot = 0;
  for (const auto* cls : {&pos, &neg})
    for (int g : *cls) fold_of[g] = static_cast<int>(slot++ % static_cast<std::size_t>(k));
  std::vector<int> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = fold_of.at(groups[i]);
  return out;
}

std::vector<int> stratified_folds(const std::vector<int>& y, int k, std::uint64_t seed) {
  std::vector<int> groups(y.size());
  std::iota(groups.begin(), groups.end(), 0);
  return stratified_folds(y, groups, k, seed);
}

RfeResult rfe(const Eigen::MatrixXd& X, const std::vector<int>& y, int target, const Hyper& hyper,
              std::uint64_t seed) {
  if (target < 1 || target > X.cols())
    throw ParameterError("rfe: target " + std::to_string(target) + " outside [1, " + std::to_string(X.cols()) + "]");
  RfeResult res;
  res.selected.resize(static_cast<std::size_t>(X.cols()));
  std::iota(res.selected.begin(), res.selected.end(), 0);
  for (std::uint64_t iter = 0; static_cast<int>(res.selected.size()) > target; ++iter) {
    const Forest f = train_forest(select_columns(X, res.selected), y, hyper, derive_seed(seed, "rfe", iter));
    const Eigen::VectorXd imp = feature_importance(f);
    Eigen::Index worst = 0;
    for (Eigen::Index j = 1; j < imp.size(); ++j)
      if (imp(j) < imp(worst)) worst = j;
    res.eliminated.push_back(res.selected[static_cast<std::size_t>(worst)]);
    res.selected.erase(res.selected.begin() + worst);
  }
  return res;
}

std::vector<Hyper> SearchSpace::configs(int n_trees) const {
  std::vector<Hyper> out;
  for (int d : depths)
    for (Criterion c : criteria)
      for (double f : fractions) {
        Hyper h;
        h.depth = d;
        h.criterion = c;
        h.feature_fraction = f;
        h.n_trees = n_trees;
        out.push_back(h);
      }
  return out;
}

double cv_auroc(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& folds, int k,
                const Hyper& hyper, std::uint64_t seed) {
  double total = 0.0;
  for (int f = 0; f < k; ++f) {
    std::vector<int> tr, va;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? va : tr).push_back(static_cast<int>(i));
    std::vector<int> ytr, yva;
    for (int i : tr) ytr.push_back(y[static_cast<std::size_t>(i)]);
    for (int i : va) yva.push_back(y[static_cast<std::size_t>(i)]);
    if (std::count(yva.begin(), yva.end(), 1) == 0 || std::count(yva.begin(), yva.end(), 0) == 0)
      throw StratificationError("cv_auroc: fold " + std::to_string(f) + " holds a single class");
    const Forest forest = train_forest(select_rows(X, tr), ytr, hyper, derive_seed(seed, "cv", static_cast<std::uint64_t>(f)));
    const Eigen::VectorXd s = predict_proba(forest, select_rows(X, va));
    total += auroc({s.data(), static_cast<std::size_t>(s.size())}, yva);
  }
  return total / k;
}

SearchResult bayes_search(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& groups,
                          const SearchSpace& space, const SearchConfig& cfg, std::uint64_t seed) {
  if (cfg.budget < 5) throw ParameterError("bayes_search: budget must be at least 5");
  const std::vector<Hyper> configs = space.configs(cfg.n_trees);
  if (configs.empty()) throw ParameterError("bayes_search: empty search space");

  int n_pos = 0, n_neg = 0;
  for (const auto& [g, l] : group_labels(y, groups)) ++(l == 1 ? n_pos : n_neg);
  const int k = std::min({cfg.folds, n_pos, n_neg});
  if (k < 2)
    throw StratificationError("bayes_search: " + std::to_string(n_pos) + " positive / " + std::to_string(n_neg) +
                              " negative groups are too few for 2-fold stratified CV");
  const std::vector<int> folds = stratified_folds(y, groups, k, derive_seed(seed, "search-folds"));
  const std::uint64_t cv_seed = derive_seed(seed, "search-cv");

  const std::size_t n = configs.size();
  const std::size_t budget = std::min(n, static_cast<std::size_t>(cfg.budget));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, "search-init"));
  portable_shuffle(rng, order);

  SearchResult res;
  std::vector<std::size_t> done;
  std::vector<double> scores;
  std::vector<char> evaluated(n, 0);
  auto evaluate = [&](std::size_t idx) {
    const double s = cv_auroc(X, y, folds, k, configs[idx], cv_seed);
    done.push_back(idx);
    scores.push_back(s);
    evaluated[idx] = 1;
    res.history.emplace_back(configs[idx], s);
    if (res.history.size() == 1 || s > res.best_score) {
      res.best = configs[idx];
      res.best_score = s;
    }
  };

  const std::size_t n_init = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.initial, 1)), budget);
  for (std::size_t i = 0; i < n_init; ++i) evaluate(order[i]);

  while (done.size() < budget) {
    Eigen::MatrixXd pts(3, static_cast<Eigen::Index>(done.size()));
    Eigen::VectorXd z(static_cast<Eigen::Index>(done.size()));
    for (std::size_t i = 0; i < done.size(); ++i) {
      pts.col(static_cast<Eigen::Index>(i)) = encode(space, done[i]);
      z(static_cast<Eigen::Index>(i)) = scores[i];
    }
    const double mean = z.mean();
    const double sd = std::sqrt((z.array() - mean).square().mean());
    z = (z.array() - mean) / (sd > 1e-12 ? sd : 1.0);
    const Gp gp = fit_gp(pts, z);
    const double best = z.maxCoeff();

    std::size_t pick = n;
    double pick_ei = -1.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (evaluated[c]) continue;
      const Eigen::Vector3d e = encode(space, c);
      Eigen::VectorXd kv(pts.cols());
      for (Eigen::Index i = 0; i < pts.cols(); ++i) kv(i) = gp.kernel(e, pts.col(i));
      const double mu = kv.dot(gp.alpha);
      const double var = std::max(0.0, 1.0 + kJitter - kv.dot(gp.llt.solve(kv)));
      const double ei = expected_improvement(mu, std::sqrt(var), best);
      if (ei > pick_ei) {
        pick_ei = ei;
        pick = c;
      }
    }
    evaluate(pick);
  }
  return res;
}

}  // namespace triage
