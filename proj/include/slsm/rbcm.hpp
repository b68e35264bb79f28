#pragma once

#include <cstdint>
#include <vector>

#include "slsm/gp.hpp"

namespace slsm {

enum class PartitionStrategy { contiguous, random };
enum class BetaMode { entropy, uniform };

[[nodiscard]] std::vector<std::vector<std::size_t>> partition(std::size_t n, std::size_t M,
                                                              PartitionStrategy strategy = PartitionStrategy::contiguous,
                                                              std::uint64_t seed = 0);

// Experts of at most 512 points.
[[nodiscard]] std::size_t default_expert_count(std::size_t n);

// Experts conditioned on subsets of one dataset, all sharing the same
// hyperparameters and the same (global) normalization.
struct ExpertEnsemble {
  Hyperparameters params;  // normalized units, shared by every expert
  Normalization norm;
  std::vector<std::vector<std::size_t>> subsets;
  std::vector<TrainedModel> experts;
  BetaMode beta_mode = BetaMode::entropy;
  bool shared_full_data = false;  // every expert holds the whole training set
  std::string train_fingerprint;

  [[nodiscard]] std::size_t size() const { return experts.size(); }
};

// Conditions one expert per subset; the subsets may overlap only when
// `shared_full_data` is set.
[[nodiscard]] ExpertEnsemble make_ensemble(const Dataset& data, const Hyperparameters& params, const Normalization& norm,
                                           std::vector<std::vector<std::size_t>> subsets,
                                           BetaMode beta_mode = BetaMode::entropy);

// M experts that each hold the full training set.
[[nodiscard]] ExpertEnsemble shared_full_data_ensemble(const Dataset& data, const Hyperparameters& params,
                                                       const Normalization& norm, std::size_t M,
                                                       BetaMode beta_mode = BetaMode::uniform);

// Sum of per-expert NLMLs over transformed coordinates. `normalized` must
// outlive the objective.
[[nodiscard]] Objective make_rbcm_objective(const Dataset& normalized,
                                            const std::vector<std::vector<std::size_t>>& subsets,
                                            const Hyperparameters& shape);

struct RbcmFitResult {
  ExpertEnsemble ensemble;
  OptResult opt;
};

struct RbcmConfig {
  std::size_t experts = 0;  // 0 picks default_expert_count
  PartitionStrategy strategy = PartitionStrategy::contiguous;
  BetaMode beta_mode = BetaMode::entropy;
  std::uint64_t seed = 0;
};

[[nodiscard]] RbcmFitResult rbcm_fit(const Dataset& data, const Hyperparameters& init, const OptConfig& opt,
                                     const RbcmConfig& cfg = {});

[[nodiscard]] Prediction rbcm_predict(const ExpertEnsemble& ens, const Eigen::MatrixXd& Xstar,
                                      VarianceMode mode = VarianceMode::latent);

}  // namespace slsm
