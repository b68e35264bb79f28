#pragma once

#include <Eigen/Core>

namespace slsm {

[[nodiscard]] double mse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);
[[nodiscard]] double mae(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);
// MSE divided by the population variance of y_true.
[[nodiscard]] double smse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

}  // namespace slsm
