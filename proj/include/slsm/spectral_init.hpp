#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "slsm/dataset.hpp"
#include "slsm/kernel.hpp"

namespace slsm {

// One-sided periodogram of a uniformly sampled series at angular
// frequencies 2 pi k / (n dt), k = 1..floor(n/2).
struct SpectrumEstimate {
  Eigen::VectorXd freqs;
  Eigen::VectorXd powers;
  double delta_t = 1.0;

  [[nodiscard]] double bin_width() const;
  void validate() const;
};

// Mean removed, no taper. Powers are |FFT|^2 dt / (pi n), so that
// sum(powers) * bin_width() is the sample variance (up to the Nyquist bin).
[[nodiscard]] SpectrumEstimate periodogram(const Eigen::VectorXd& y, double delta_t);
[[nodiscard]] SpectrumEstimate periodogram(const Dataset& data);

enum class MixtureKind { laplace, gaussian };

// `scale` is expressed as the matching kernel sigma: the Gaussian standard
// deviation, or sqrt(2) times the Laplace diversity.
struct MixtureComponentFit {
  double weight = 0.0;
  double location = 0.0;
  double scale = 0.0;
};

struct MixtureFit {
  MixtureKind kind = MixtureKind::laplace;
  std::vector<MixtureComponentFit> components;
  std::vector<double> loglik_trace;  // per EM iteration of the winning run
  int restart_index = 0;
  int reseeded = 0;
  int dropped = 0;

  [[nodiscard]] double density(double s) const;
  [[nodiscard]] double loglik() const { return loglik_trace.empty() ? 0.0 : loglik_trace.back(); }
};

struct EmConfig {
  int max_iters = 200;
  double tol = 1e-8;
  int restarts = 5;
};

// EM on the periodogram bins treated as samples weighted by their power.
[[nodiscard]] MixtureFit em_mixture(const SpectrumEstimate& spec, int Q, MixtureKind kind, std::uint64_t seed,
                                    const EmConfig& cfg = {});

// Mixture kernel from a spectral fit: w = fitted weight * y_var, mu and sigma
// from the fit, gamma ~ U(-1, 1) for slsm, noise = 0.1 * y_var.
[[nodiscard]] Hyperparameters init_params(const MixtureFit& fit, KernelType type, double y_var, std::uint64_t seed);

// Seeded random initialization used when no periodogram is available.
// `X` should be in the units the model is trained in.
[[nodiscard]] Hyperparameters random_init(const Eigen::MatrixXd& X, KernelType type, int Q, double y_var,
                                          std::uint64_t seed);

struct Initialization {
  Hyperparameters params;
  bool spectral = false;
  std::optional<SpectrumEstimate> spectrum;
  std::optional<MixtureFit> mixture;
};

// Chooses spectral initialization for uniform univariate data and mixture
// kernels, random otherwise. `data` must already be normalized.
[[nodiscard]] Initialization initialize(const Dataset& data, KernelType type, int Q, std::uint64_t seed);

}  // namespace slsm
