#include "triage/scaler.hpp"

#include <cmath>
#include <limits>

#include "triage/errors.hpp"

namespace triage {

void MinMaxScaler::fit(const Eigen::MatrixXd& X) {
  const Eigen::Index cols = X.cols();
  min_.setConstant(cols, std::numeric_limits<double>::quiet_NaN());
  max_.setConstant(cols, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const double v = X(r, c);
      if (std::isnan(v)) continue;
      if (std::isnan(min_(c)) || v < min_(c)) min_(c) = v;
      if (std::isnan(max_(c)) || v > max_(c)) max_(c) = v;
    }
  }
  fitted_ = true;
}

Eigen::MatrixXd MinMaxScaler::transform(const Eigen::MatrixXd& X) const {
  if (!fitted_) throw StateError("MinMaxScaler: transform before fit");
  if (X.cols() != min_.size())
    throw SchemaError("MinMaxScaler: expected " + std::to_string(min_.size()) + " columns, got " +
                      std::to_string(X.cols()));
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double range = max_(c) - min_(c);
    // all-NaN training columns have a NaN range and stay NaN
    if (range == 0.0)
      out.col(c) = X.col(c).unaryExpr([](double v) { return std::isnan(v) ? v : 0.0; });
    else
      out.col(c) = (X.col(c).array() - min_(c)) / range;
  }
  return out;
}

nlohmann::json MinMaxScaler::to_json() const {
  if (!fitted_) throw StateError("MinMaxScaler: serialising an unfitted scaler");
  auto vec = [](const Eigen::RowVectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x));
    return a;
  };
  return {{"min", vec(min_)}, {"max", vec(max_)}};
}

MinMaxScaler MinMaxScaler::from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) {
    Eigen::RowVectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
      v(static_cast<Eigen::Index>(i)) = a[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : a[i].get<double>();
    return v;
  };
  MinMaxScaler s;
  s.min_ = vec(j.at("min"));
  s.max_ = vec(j.at("max"));
  if (s.min_.size() != s.max_.size()) throw SchemaError("MinMaxScaler: min/max length mismatch");
  s.fitted_ = true;
  return s;
}

}  // namespace triage
