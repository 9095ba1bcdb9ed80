#pragma once

#include <Eigen/Dense>
#include <json.hpp>

namespace triage {

/// Per-column min-max scaling fitted on training rows. NaN entries are ignored
/// by fit and pass through transform.
class MinMaxScaler {
 public:
  void fit(const Eigen::MatrixXd& X);
  /// Unclipped: test values outside the fitted range map outside [0, 1].
  /// Constant columns map to 0. Throws StateError before fit and
  /// SchemaError on a column-count mismatch.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd fit_transform(const Eigen::MatrixXd& X) {
    fit(X);
    return transform(X);
  }

  bool fitted() const { return fitted_; }
  const Eigen::RowVectorXd& min() const { return min_; }
  const Eigen::RowVectorXd& max() const { return max_; }

  nlohmann::json to_json() const;
  static MinMaxScaler from_json(const nlohmann::json& j);

 private:
  bool fitted_ = false;
  Eigen::RowVectorXd min_, max_;
};

}  // namespace triage
