#pragma once

#include <string>
#include <vector>

#include "slsm/gp.hpp"

namespace slsm {

enum class ResetScope {
  all,          // rewind weight, frequency, scale and skew
  weights_only  // rewind only the weight, keep the trained shape
};

struct PruneConfig {
  double threshold = 1.0;  // compared against weights in target-variance units
  int rounds = 2;
  OptConfig inner;  // budget applies to every training, not in total
  ResetScope reset = ResetScope::all;

  void validate() const;
};

struct PruneRound {
  int round = 0;
  std::vector<std::size_t> pruned;        // indices into the initial component list
  std::vector<double> pruned_weights;     // in target-variance units
  std::vector<std::size_t> survivors;     // indices into the initial component list
  std::vector<MixtureComponent> restart;  // retraining start, normalized units
  double nlml_before = 0.0;               // raw-scale NLML of the model being pruned
  double nlml_after = 0.0;                // raw-scale NLML after retraining
  bool kept_largest = false;              // every weight fell below the threshold
};

struct PruneReport {
  double threshold = 0.0;
  std::size_t initial_q = 0;
  std::vector<PruneRound> rounds;

  [[nodiscard]] std::size_t final_q() const;
  [[nodiscard]] std::size_t total_pruned() const;
};

struct LthResult {
  TrainedModel model;
  OptResult opt;  // last training
  PruneReport report;
  std::vector<std::string> warnings;
};

// Train, prune components whose weight is below the threshold, rewind the
// survivors to their initial values and retrain, for cfg.rounds rounds.
// `init` is in normalized units, as for fit().
[[nodiscard]] LthResult lth_fit(const Dataset& data, const Hyperparameters& init, const PruneConfig& cfg);

}  // namespace slsm
