#include "triage/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "triage/errors.hpp"
#include "triage/seeds.hpp"

namespace triage {

namespace {

constexpr int kFormatVersion = 1;

double impurity(Criterion c, double w, double w1) {
  if (w <= 0.0) return 0.0;
  const double p = w1 / w;
  if (c == Criterion::gini) return 2.0 * p * (1.0 - p);
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

int subset_size(double fraction, Eigen::Index n_features) {
  const double k = std::ceil(fraction * static_cast<double>(n_features) - 1e-9);
  return static_cast<int>(std::clamp<double>(k, 1.0, static_cast<double>(n_features)));
}

struct NodeStats {
  double w = 0.0, w1 = 0.0;
  int count = 0;  // distinct rows
};

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// Training data in canonical row order plus one value-sorted row list per feature.
struct TrainData {
  Eigen::MatrixXd X;
  std::vector<int> y;
  std::vector<std::vector<int>> sorted;
};

std::vector<int> canonical_order(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  std::vector<int> order(static_cast<std::size_t>(X.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    for (Eigen::Index f = 0; f < X.cols(); ++f)
      if (X(a, f) != X(b, f)) return X(a, f) < X(b, f);
    return y[static_cast<std::size_t>(a)] < y[static_cast<std::size_t>(b)];
  });
  return order;
}

TrainData canonical(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& order) {
  const Eigen::Index n = X.rows(), F = X.cols();
  TrainData d;
  d.X.resize(n, F);
  d.y.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    d.X.row(i) = X.row(order[static_cast<std::size_t>(i)]);
    d.y[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  }
  d.sorted.resize(static_cast<std::size_t>(F));
  for (Eigen::Index f = 0; f < F; ++f) {
    auto& s = d.sorted[static_cast<std::size_t>(f)];
    s.resize(static_cast<std::size_t>(n));
    std::iota(s.begin(), s.end(), 0);
    std::stable_sort(s.begin(), s.end(), [&](int a, int b) { return d.X(a, f) < d.X(b, f); });
  }
  return d;
}

Tree grow_tree(const TrainData& d, const std::vector<int>& w, const Hyper& hyper, std::mt19937_64& rng) {
  const int n = static_cast<int>(d.X.rows());
  const int F = static_cast<int>(d.X.cols());
  Tree tree;
  std::vector<NodeStats> stats(1);
  std::vector<int> node_of(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (!w[i]) continue;
    stats[0].w += w[i];
    stats[0].w1 += w[i] * d.y[static_cast<std::size_t>(i)];
    ++stats[0].count;
  }
  tree.nodes.push_back({});
  std::vector<int> frontier{0};
  const int k = subset_size(hyper.feature_fraction, F);

  for (int level = 0; level < hyper.depth && !frontier.empty(); ++level) {
    const std::size_t m = frontier.size();
    // want[s * F + f]: frontier slot s considers feature f
    std::vector<char> want(m * static_cast<std::size_t>(F), 0);
    std::vector<char> any_want(static_cast<std::size_t>(F), 0);
    std::vector<int> slot_of(tree.nodes.size(), -1);
    std::vector<int> pool(static_cast<std::size_t>(F));
    for (std::size_t s = 0; s < m; ++s) {
      const NodeStats& st = stats[static_cast<std::size_t>(frontier[s])];
      if (st.count < hyper.min_samples_split || impurity(hyper.criterion, st.w, st.w1) <= 0.0) continue;
      slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
      std::iota(pool.begin(), pool.end(), 0);
      for (int j = 0; j < k; ++j) {
        const int pick = j + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(F - j)));
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
        want[s * static_cast<std::size_t>(F) + static_cast<std::size_t>(pool[static_cast<std::size_t>(j)])] = 1;
        any_want[static_cast<std::size_t>(pool[static_cast<std::size_t>(j)])] = 1;
      }
    }

    std::vector<Candidate> best(m);
    std::vector<NodeStats> left(m);
    std::vector<double> prev(m);
    std::vector<char> has_prev(m);
    for (int f = 0; f < F; ++f) {
      if (!any_want[static_cast<std::size_t>(f)]) continue;
      std::fill(left.begin(), left.end(), NodeStats{});
      std::fill(has_prev.begin(), has_prev.end(), 0);
      for (int r : d.sorted[static_cast<std::size_t>(f)]) {
        if (!w[static_cast<std::size_t>(r)]) continue;
        const int slot = slot_of[static_cast<std::size_t>(node_of[static_cast<std::size_t>(r)])];
        if (slot < 0 || !want[static_cast<std::size_t>(slot) * static_cast<std::size_t>(F) + static_cast<std::size_t>(f)])
          continue;
        const auto s = static_cast<std::size_t>(slot);
        const double v = d.X(r, f);
        if (has_prev[s] && v > prev[s]) {
          const NodeStats& tot = stats[static_cast<std::size_t>(frontier[s])];
          const NodeStats& l = left[s];
          if (l.count >= hyper.min_samples_leaf && tot.count - l.count >= hyper.min_samples_leaf) {
            const double wr = tot.w - l.w, w1r = tot.w1 - l.w1;
            const double gain = tot.w * impurity(hyper.criterion, tot.w, tot.w1) -
                                l.w * impurity(hyper.criterion, l.w, l.w1) - wr * impurity(hyper.criterion, wr, w1r);
            if (gain > best[s].gain + 1e-10 * tot.w) {
              double thr = prev[s] / 2.0 + v / 2.0;
              if (thr >= v) thr = prev[s];
              best[s] = {gain, f, thr};
            }
          }
        }
        left[s].w += w[static_cast<std::size_t>(r)];
        left[s].w1 += w[static_cast<std::size_t>(r)] * d.y[static_cast<std::size_t>(r)];
        ++left[s].count;
        prev[s] = v;
        has_prev[s] = 1;
      }
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < m; ++s) {
      if (best[s].feature < 0) continue;
      const int id = frontier[s];
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      stats.resize(tree.nodes.size());
      TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.gain = best[s].gain;
      node.left = l;
      node.right = l + 1;
      next.push_back(l);
      next.push_back(l + 1);
    }
    for (int i = 0; i < n; ++i) {
      if (!w[static_cast<std::size_t>(i)]) continue;
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])];
      if (node.feature < 0) continue;
      const int child = d.X(i, node.feature) <= node.threshold ? node.left : node.right;
      node_of[static_cast<std::size_t>(i)] = child;
      NodeStats& cs = stats[static_cast<std::size_t>(child)];
      cs.w += w[static_cast<std::size_t>(i)];
      cs.w1 += w[static_cast<std::size_t>(i)] * d.y[static_cast<std::size_t>(i)];
      ++cs.count;
    }
    frontier = std::move(next);
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i)
    tree.nodes[i].p1 = stats[i].w > 0.0 ? stats[i].w1 / stats[i].w : 0.0;
  return tree;
}

void validate(const Eigen::MatrixXd& X, const std::vector<int>& y, const Hyper& hyper) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw ParameterError("train_forest: X/y row mismatch");
  if (X.rows() == 0 || X.cols() == 0) throw InsufficientDataError("train_forest: empty training matrix");
  if (hyper.depth < 1 || hyper.n_trees < 1 || hyper.min_samples_split < 2 || hyper.min_samples_leaf < 1 ||
      !(hyper.feature_fraction > 0.0 && hyper.feature_fraction <= 1.0))
    throw ParameterError("train_forest: invalid hyperparameters");
  if (!X.allFinite()) throw ParameterError("train_forest: non-finite feature values");
  for (int v : y)
    if (v != 0 && v != 1) throw ParameterError("train_forest: labels must be 0/1");
}

}  // namespace

std::string_view to_string(Criterion c) { return c == Criterion::gini ? "gini" : "entropy"; }

Criterion parse_criterion(std::string_view s) {
  if (s == "gini") return Criterion::gini;
  if (s == "entropy") return Criterion::entropy;
  throw ParameterError("unknown split criterion '" + std::string(s) + "'");
}

double Tree::predict(const double* row, Eigen::Index stride) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& nd = nodes[static_cast<std::size_t>(i)];
    i = row[nd.feature * stride] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(i)].p1;
}

int Tree::depth() const {
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature < 0) continue;
    level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
    level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
  }
  return deepest;
}

Tree fit_tree(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& weights,
              const Hyper& hyper, std::uint64_t seed) {
  validate(X, y, hyper);
  if (weights.size() != y.size()) throw ParameterError("fit_tree: weight length mismatch");
  const std::vector<int> order = canonical_order(X, y);
  std::vector<int> w(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) w[i] = weights[static_cast<std::size_t>(order[i])];
  std::mt19937_64 rng(seed);
  return grow_tree(canonical(X, y, order), w, hyper, rng);
}

Forest train_forest(const Eigen::MatrixXd& X, const std::vector<int>& y, const Hyper& hyper, std::uint64_t seed) {
  validate(X, y, hyper);

  Forest forest;
  forest.hyper = hyper;
  forest.seed = seed;
  forest.n_features = X.cols();
  const auto pos = std::count(y.begin(), y.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) {
    forest.degenerate = true;
    Tree leaf;
    leaf.nodes.push_back({});
    leaf.nodes[0].p1 = pos ? 1.0 : 0.0;
    forest.trees.push_back(std::move(leaf));
    return forest;
  }
  const TrainData data = canonical(X, y, canonical_order(X, y));
  const std::size_t n = y.size();
  forest.trees.reserve(static_cast<std::size_t>(hyper.n_trees));
  std::vector<int> w(n);
  for (int t = 0; t < hyper.n_trees; ++t) {
    std::mt19937_64 rng(derive_seed(seed, "tree", static_cast<std::uint64_t>(t)));
    std::fill(w.begin(), w.end(), 0);
    for (std::size_t i = 0; i < n; ++i) ++w[uniform_below(rng, n)];
    forest.trees.push_back(grow_tree(data, w, hyper, rng));
  }
  return forest;
}

Eigen::VectorXd predict_proba(const Forest& forest, const Eigen::MatrixXd& X) {
  if (X.cols() != forest.n_features)
    throw SchemaError("predict_proba: model expects " + std::to_string(forest.n_features) + " features, got " +
                      std::to_string(X.cols()));
  if (forest.trees.empty()) throw StateError("predict_proba: forest has no trees");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    double s = 0.0;
    for (const Tree& t : forest.trees) s += t.predict(&X(r, 0), X.outerStride());
    out(r) = s / static_cast<double>(forest.trees.size());
  }
  return out;
}

Eigen::VectorXd feature_importance(const Forest& forest) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(forest.n_features);
  Eigen::VectorXd per_tree(forest.n_features);
  for (const Tree& t : forest.trees) {
    per_tree.setZero();
    for (const TreeNode& nd : t.nodes)
      if (nd.feature >= 0) per_tree(nd.feature) += nd.gain;
    const double s = per_tree.sum();
    if (s > 0.0) total += per_tree / s;
  }
  const double s = total.sum();
  if (s > 0.0) total /= s;
  return total;
}

nlohmann::json Forest::to_json() const {
  using nlohmann::json;
  json trees_j = json::array();
  for (const Tree& t : trees) {
    json feature = json::array(), threshold = json::array(), gain = json::array(), left = json::array(),
         right = json::array(), p1 = json::array();
    for (const TreeNode& nd : t.nodes) {
      feature.push_back(nd.feature);
      threshold.push_back(nd.threshold);
      gain.push_back(nd.gain);
      left.push_back(nd.left);
      right.push_back(nd.right);
      p1.push_back(nd.p1);
    }
    trees_j.push_back({{"feature", feature},
                       {"threshold", threshold},
                       {"gain", gain},
                       {"left", left},
                       {"right", right},
                       {"p1", p1}});
  }
  return {{"format", "triage-forest"},
          {"version", kFormatVersion},
          {"hyper",
           {{"depth", hyper.depth},
            {"criterion", std::string(triage::to_string(hyper.criterion))},
            {"feature_fraction", hyper.feature_fraction},
            {"n_trees", hyper.n_trees},
            {"min_samples_split", hyper.min_samples_split},
            {"min_samples_leaf", hyper.min_samples_leaf}}},
          {"seed", seed},
          {"n_features", n_features},
          {"degenerate", degenerate},
          {"trees", trees_j}};
}

Forest Forest::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "triage-forest") throw SchemaError("forest artifact: unknown format");
    if (j.at("version").get<int>() != kFormatVersion) throw SchemaError("forest artifact: unsupported version");
    Forest f;
    const auto& h = j.at("hyper");
    f.hyper.depth = h.at("depth").get<int>();
    f.hyper.criterion = parse_criterion(h.at("criterion").get<std::string>());
    f.hyper.feature_fraction = h.at("feature_fraction").get<double>();
    f.hyper.n_trees = h.at("n_trees").get<int>();
    f.hyper.min_samples_split = h.at("min_samples_split").get<int>();
    f.hyper.min_samples_leaf = h.at("min_samples_leaf").get<int>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.n_features = j.at("n_features").get<Eigen::Index>();
    f.degenerate = j.at("degenerate").get<bool>();
    for (const auto& tj : j.at("trees")) {
      Tree t;
      const auto& feature = tj.at("feature");
      t.nodes.resize(feature.size());
      for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        TreeNode& nd = t.nodes[i];
        nd.feature = feature.at(i).get<int>();
        nd.threshold = tj.at("threshold").at(i).get<double>();
        nd.gain = tj.at("gain").at(i).get<double>();
        nd.left = tj.at("left").at(i).get<int>();
        nd.right = tj.at("right").at(i).get<int>();
        nd.p1 = tj.at("p1").at(i).get<double>();
        const auto n = static_cast<int>(t.nodes.size());
        if (nd.feature >= f.n_features || (nd.feature >= 0 && (nd.left <= 0 || nd.left >= n || nd.right <= 0 ||
                                                               nd.right >= n)))
          throw SchemaError("forest artifact: malformed tree");
      }
      if (t.nodes.empty()) throw SchemaError("forest artifact: empty tree");
      f.trees.push_back(std::move(t));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("forest artifact: ") + e.what());
  }
}

}  // namespace triage
