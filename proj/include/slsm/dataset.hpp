#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace slsm {

// Observed inputs (one row per observation) and targets.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;
  double delta_t = 1.0;  // sampling interval, univariate uniform series only
  bool uniform = false;  // univariate with equally spaced inputs

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  [[nodiscard]] std::size_t dims() const { return static_cast<std::size_t>(X.cols()); }

  // Throws DataError on empty data, size mismatch or non-finite entries.
  void validate() const;

  [[nodiscard]] Dataset subset(const std::vector<std::size_t>& rows) const;
  [[nodiscard]] Dataset head(std::size_t count) const;
  [[nodiscard]] Dataset tail_from(std::size_t first) const;

  // Univariate series from targets at t = t0, t0 + dt, ...
  [[nodiscard]] static Dataset series(const Eigen::VectorXd& y, double dt = 1.0, double t0 = 0.0);
  [[nodiscard]] static Dataset from_arrays(Eigen::MatrixXd X, Eigen::VectorXd y);
};

// Uniformity test for a univariate input column: every gap within a
// relative 1e-6 of the mean gap. Returns the mean gap through `delta_t`.
[[nodiscard]] bool is_uniform(const Eigen::VectorXd& t, double* delta_t = nullptr);

// Affine scaling applied to training data before fitting. Inputs are only
// scaled for multivariate data (x_means empty means identity).
struct Normalization {
  double y_mean = 0.0;
  double y_std = 1.0;
  Eigen::VectorXd x_means;
  Eigen::VectorXd x_stds;

  [[nodiscard]] static Normalization fit(const Dataset& data);
  [[nodiscard]] static Normalization identity() { return {}; }

  [[nodiscard]] Eigen::MatrixXd apply_x(const Eigen::MatrixXd& X) const;
  [[nodiscard]] Eigen::VectorXd apply_y(const Eigen::VectorXd& y) const;
  [[nodiscard]] Dataset apply(const Dataset& data) const;
  [[nodiscard]] double y_var() const { return y_std * y_std; }
};

// Stable hex digest of the inputs and targets, used to tie a serialized model
// to its training data.
[[nodiscard]] std::string fingerprint(const Dataset& data);
[[nodiscard]] std::string fingerprint(const Eigen::MatrixXd& M);

}  // namespace slsm
