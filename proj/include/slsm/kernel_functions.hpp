#pragma once

// Closed-form stationary kernels on a scalar or vector lag.
//
// Frequencies are angular (radians per input unit) throughout. A spectral
// mixture component with frequency mu and scale sigma therefore reads
// cos(mu * tau) * exp(-sigma^2 tau^2 / 2) rather than the cycles-based
// cos(2 pi mu tau) * exp(-2 pi^2 sigma^2 tau^2).

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace slsm {

enum class KernelType { slsm, sm, lkp, se, rq };

[[nodiscard]] std::string_view to_string(KernelType type);
[[nodiscard]] KernelType kernel_type_from_string(std::string_view name);
[[nodiscard]] bool is_mixture(KernelType type);

struct SlsmComponent {
  double weight = 1.0;
  double freq = 0.0;   // angular frequency mu
  double scale = 1.0;  // sigma
  double skew = 0.0;   // gamma

  // kappa = sqrt(2) sigma / (gamma + sqrt(2 sigma^2 + gamma^2)), evaluated
  // without cancellation for negative gamma.
  [[nodiscard]] double kappa() const;
  void validate() const;
};

struct SlsmParams {
  std::vector<SlsmComponent> components;
  double noise_var = 0.0;

  void validate() const;
};

struct MultiSlsmComponent {
  double weight = 1.0;
  Eigen::VectorXd freq;    // mu, one entry per input dimension
  Eigen::VectorXd scale2;  // diagonal of Sigma
  Eigen::VectorXd skew;    // gamma

  [[nodiscard]] std::size_t dims() const { return static_cast<std::size_t>(freq.size()); }
  void validate() const;
};

struct BaselineKernelParams {
  KernelType variant = KernelType::se;
  double amplitude = 1.0;    // theta_f
  double lengthscale = 1.0;  // ell
  double rq_alpha = 1.0;

  void validate() const;
};

// Lags beyond this magnitude are evaluated with numerator and denominator
// divided by tau^2 so the tau^4 terms cannot overflow.
inline constexpr double kLargeLag = 1e4;

[[nodiscard]] double slsm_component(double tau, const SlsmComponent& c);
[[nodiscard]] double slsm_kernel(double tau, const SlsmParams& p);
// Unweighted component value; multiply by c.weight for the mixture term.
[[nodiscard]] double slsm_kernel_multi(std::span<const double> tau, const MultiSlsmComponent& c);
[[nodiscard]] double sm_kernel(double tau, const SlsmParams& p);
[[nodiscard]] double lkp_kernel(double tau, const SlsmParams& p);
[[nodiscard]] double baseline_kernel(double tau, const BaselineKernelParams& b);

// Symmetrized skewed Laplace density 0.5 * (phi(s) + phi(-s)), unit mass.
[[nodiscard]] double spectral_density(double s, const SlsmComponent& c);
// Unsymmetrized skewed Laplace density phi(s; mu, gamma, sigma).
[[nodiscard]] double skewed_laplace_density(double s, const SlsmComponent& c);
// Symmetrized density for the given mixture family (Gaussian for SM,
// Laplace for LKP, skewed Laplace for SLSM). Unit mass, weight not applied.
[[nodiscard]] double spectral_density(double s, KernelType type, const SlsmComponent& c);

// Partials of slsm_kernel at lag tau with respect to the transformed
// coordinates (log w, log mu, log sigma, gamma), four entries per component
// in component order.
[[nodiscard]] std::vector<double> kernel_grad(double tau, const SlsmParams& p);

}  // namespace slsm
