#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace triage {

enum class Criterion { gini, entropy };
std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view s);

struct Hyper {
  int depth = 3;
  Criterion criterion = Criterion::gini;
  double feature_fraction = 0.3;
  int n_trees = 300;
  int min_samples_split = 2;
  int min_samples_leaf = 1;

  bool operator==(const Hyper&) const = default;
};

struct TreeNode {
  int feature = -1;        // -1 for a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  double gain = 0.0;       // weighted impurity decrease
  int left = -1, right = -1;
  double p1 = 0.0;         // positive-class frequency at the node
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const double* row, Eigen::Index stride) const;
  int depth() const;
};

struct Forest {
  Hyper hyper;
  std::uint64_t seed = 0;
  Eigen::Index n_features = 0;
  bool degenerate = false;  // trained on a single class
  std::vector<Tree> trees;

  nlohmann::json to_json() const;
  static Forest from_json(const nlohmann::json& j);
};

/// Bootstrap CART forest. y holds 0/1 labels. Rows are put in a canonical
/// (lexicographic) order first, so the result does not depend on row order.
Forest train_forest(const Eigen::MatrixXd& X, const std::vector<int>& y, const Hyper& hyper, std::uint64_t seed);

/// Grows a single tree on fixed per-row weights (e.g. bootstrap counts);
/// `seed` drives only the per-node feature subsets.
Tree fit_tree(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& weights,
              const Hyper& hyper, std::uint64_t seed);

/// Mean of per-tree leaf positive frequencies. Throws SchemaError on a
/// feature-count mismatch.
Eigen::VectorXd predict_proba(const Forest& forest, const Eigen::MatrixXd& X);

/// Mean impurity decrease per feature: normalised within each tree, averaged,
/// then normalised to sum 1 (all zero when no tree splits).
Eigen::VectorXd feature_importance(const Forest& forest);

}  // namespace triage
