#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "slsm/kernel_functions.hpp"

namespace slsm {

// One mixture component over P input dimensions. `scale` holds per-dimension
// sigma (not sigma^2); `skew` is ignored by SM and LKP kernels.
struct MixtureComponent {
  double weight = 1.0;
  Eigen::VectorXd freq;
  Eigen::VectorXd scale;
  Eigen::VectorXd skew;

  [[nodiscard]] std::size_t dims() const { return static_cast<std::size_t>(freq.size()); }
};

// A stationary kernel of any supported family together with its parameters.
// Mixture families (SLSM, SM, LKP) own a list of components; the SE and RQ
// baselines are isotropic.
class Kernel {
 public:
  Kernel() = default;

  static Kernel mixture(KernelType type, std::vector<MixtureComponent> components);
  static Kernel baseline(const BaselineKernelParams& params, std::size_t dims = 1);
  // Univariate mixture from scalar components (noise_var is not part of a kernel).
  static Kernel from_slsm(KernelType type, const SlsmParams& params);

  [[nodiscard]] KernelType type() const { return type_; }
  [[nodiscard]] std::size_t dims() const { return dims_; }
  [[nodiscard]] bool is_mixture() const { return slsm::is_mixture(type_); }
  [[nodiscard]] bool has_skew() const { return type_ == KernelType::slsm; }
  [[nodiscard]] const std::vector<MixtureComponent>& components() const { return components_; }
  [[nodiscard]] std::size_t num_components() const { return components_.size(); }
  [[nodiscard]] const BaselineKernelParams& baseline_params() const { return baseline_; }

  // Same family, different component list (pruning, resets).
  [[nodiscard]] Kernel with_components(std::vector<MixtureComponent> components) const;
  // Scalar view of a univariate mixture.
  [[nodiscard]] SlsmParams to_slsm(double noise_var = 0.0) const;

  [[nodiscard]] double operator()(std::span<const double> lag) const;
  [[nodiscard]] double operator()(double lag) const { return (*this)(std::span<const double>(&lag, 1)); }
  // k(0): the prior signal variance.
  [[nodiscard]] double variance() const;

  // Number of free (transformed) kernel parameters; see transform.hpp for the layout.
  [[nodiscard]] std::size_t num_params() const;
  [[nodiscard]] std::size_t params_per_component() const;
  // Writes d k(lag) / d theta_j for every transformed kernel parameter into
  // `grad` (size num_params()) and returns k(lag).
  double value_and_grad(std::span<const double> lag, std::span<double> grad) const;

  void validate() const;

 private:
  KernelType type_ = KernelType::slsm;
  std::size_t dims_ = 1;
  std::vector<MixtureComponent> components_;
  BaselineKernelParams baseline_;
};

// Kernel plus the Gaussian observation-noise variance.
struct Hyperparameters {
  Kernel kernel;
  double noise_var = 0.0;
};

// Cross-covariance between the rows of X1 and X2. Noise is not added.
[[nodiscard]] Eigen::MatrixXd gram(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2, const Kernel& kernel);
// Symmetric covariance of the rows of X with themselves.
[[nodiscard]] Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const Kernel& kernel);

}  // namespace slsm
