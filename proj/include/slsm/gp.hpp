#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "slsm/dataset.hpp"
#include "slsm/kernel.hpp"
#include "slsm/optimizer.hpp"

namespace slsm {

// Relative jitter steps, multiplied by trace(A)/n, tried in order after a
// plain Cholesky of A fails.
inline constexpr std::array<double, 5> kJitterLadder = {1e-10, 1e-8, 1e-6, 1e-4, 1e-2};

struct Factorization {
  Eigen::MatrixXd L;    // lower triangular, L L' = A + jitter I
  double jitter = 0.0;  // absolute jitter added to the diagonal
};

[[nodiscard]] Factorization factorize(const Eigen::MatrixXd& A);

// NLML = data_fit + complexity + constant, with
//   data_fit   = y' Ky^{-1} y / 2
//   complexity = log|Ky| / 2
//   constant   = n log(2 pi) / 2
// where Ky = K + (noise_var + jitter) I.
struct NlmlBreakdown {
  double data_fit = 0.0;
  double complexity = 0.0;
  double constant = 0.0;
  double total = 0.0;
  double jitter_used = 0.0;

  [[nodiscard]] double without_constant() const { return data_fit + complexity; }
};

[[nodiscard]] NlmlBreakdown nlml_breakdown(const Dataset& data, const Hyperparameters& params);
[[nodiscard]] double nlml(const Dataset& data, const Hyperparameters& params);
// Gradient over the transformed slots (see transform.hpp), noise last.
[[nodiscard]] Eigen::VectorXd nlml_grad(const Dataset& data, const Hyperparameters& params);
double nlml_value_and_grad(const Dataset& data, const Hyperparameters& params, Eigen::VectorXd& grad);

enum class VarianceMode { latent, observation };

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  VarianceMode mode = VarianceMode::latent;
  int clamped = 0;  // entries that came out negative and were set to 0
};

// A GP conditioned on its (normalized) training data. Immutable once built.
struct TrainedModel {
  Hyperparameters params;  // in normalized units
  Normalization norm;
  Eigen::MatrixXd X;  // normalized training inputs
  Eigen::VectorXd y;  // normalized training targets
  Eigen::MatrixXd chol_L;
  Eigen::VectorXd alpha;
  double jitter_used = 0.0;
  std::string train_fingerprint;
  NlmlBreakdown fit;  // on the normalized data

  // NLML of the raw targets: the normalized value plus n log(y_std).
  [[nodiscard]] double raw_nlml() const;
  // Weights, amplitude and noise rescaled to target units.
  [[nodiscard]] Hyperparameters reported_params() const;
};

// Weights, amplitude and noise rescaled from normalized to target units.
[[nodiscard]] Hyperparameters denormalize(const Hyperparameters& params, const Normalization& norm);

// Factorizes K + noise I on `data` after applying `norm`. Params are in the
// normalized units.
[[nodiscard]] TrainedModel condition(const Dataset& data, const Hyperparameters& params, const Normalization& norm);

[[nodiscard]] Prediction predict(const TrainedModel& model, const Eigen::MatrixXd& Xstar,
                                 VarianceMode mode = VarianceMode::latent);

struct FitResult {
  TrainedModel model;
  OptResult opt;
};

// Normalizes `data`, minimizes NLML from `init` (normalized units) and
// conditions on the optimum.
[[nodiscard]] FitResult fit(const Dataset& data, const Hyperparameters& init, const OptConfig& cfg);

// NLML objective over transformed coordinates; non-finite where the
// parameters or the factorization are invalid.
[[nodiscard]] Objective make_nlml_objective(const Dataset& normalized, const Hyperparameters& shape);

// n_paths independent draws from N(0, K(X, X)), one per row.
[[nodiscard]] Eigen::MatrixXd sample_prior(const Kernel& kernel, const Eigen::MatrixXd& X, int n_paths,
                                           std::uint64_t seed);

}  // namespace slsm
