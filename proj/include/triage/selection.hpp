#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "triage/forest.hpp"

namespace triage {

/// Fold id per row. Groups (e.g. patients) never straddle folds; each group
/// takes the label of its rows. Classes are dealt round-robin after a seeded
/// shuffle, so every fold's positive count is within one group of the
/// global ratio. Throws StratificationError when a class has fewer groups
/// than folds.
std::vector<int> stratified_folds(const std::vector<int>& y, const std::vector<int>& groups, int k,
                                  std::uint64_t seed);
std::vector<int> stratified_folds(const std::vector<int>& y, int k, std::uint64_t seed);

struct RfeResult {
  std::vector<int> selected;    // surviving column indices, ascending
  std::vector<int> eliminated;  // in elimination order
};

/// Recursive feature elimination: train, drop the single lowest-importance
/// column (lowest index on ties), repeat until `target` remain.
RfeResult rfe(const Eigen::MatrixXd& X, const std::vector<int>& y, int target, const Hyper& hyper,
              std::uint64_t seed);

struct SearchSpace {
  std::vector<int> depths{2, 3};
  std::vector<Criterion> criteria{Criterion::gini, Criterion::entropy};
  std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

  std::vector<Hyper> configs(int n_trees) const;
};

struct SearchResult {
  Hyper best;
  double best_score = 0.0;
  std::vector<std::pair<Hyper, double>> history;  // evaluation order
};

struct SearchConfig {
  int folds = 5;
  int budget = 20;
  int initial = 5;
  int n_trees = 300;
};

/// Gaussian-process / expected-improvement search over the discretised space,
/// scoring each configuration by mean AUROC across grouped stratified folds.
SearchResult bayes_search(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& groups,
                          const SearchSpace& space, const SearchConfig& cfg, std::uint64_t seed);

/// Mean validation AUROC of one configuration over the given fold assignment.
double cv_auroc(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& folds, int k,
                const Hyper& hyper, std::uint64_t seed);

}  // namespace triage
