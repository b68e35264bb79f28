#include "slsm/metrics.hpp"

#include <string>

#include "slsm/errors.hpp"

namespace slsm {

namespace {

void check(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Eigen::Index min_size) {
  if (a.size() != b.size()) throw DimensionError(a.size(), b.size(), "metric inputs");
  if (a.size() < min_size) throw DataError("metric needs at least " + std::to_string(min_size) + " values");
  if (!a.allFinite() || !b.allFinite()) throw DataError("metric inputs contain non-finite values");
}

}  // namespace

double mse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  check(y_true, y_pred, 1);
  return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

double mae(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  check(y_true, y_pred, 1);
  return (y_true - y_pred).cwiseAbs().sum() / static_cast<double>(y_true.size());
}

double smse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  check(y_true, y_pred, 2);
  const Eigen::VectorXd centered = y_true.array() - y_true.mean();
  const double var = centered.squaredNorm() / static_cast<double>(y_true.size());
  if (!(var > 0.0)) throw DataError("SMSE is undefined for test targets with zero variance");
  return mse(y_true, y_pred) / var;
}

}  // namespace slsm
