#include "slsm/pruning.hpp"

#include <algorithm>
#include <cmath>

#include "slsm/errors.hpp"

namespace slsm {

void PruneConfig::validate() const {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) throw UsageError("prune threshold must be finite and >= 0");
  if (rounds < 1) throw UsageError("prune rounds must be >= 1");
  inner.validate();
}

std::size_t PruneReport::final_q() const { return rounds.empty() ? initial_q : rounds.back().survivors.size(); }

std::size_t PruneReport::total_pruned() const { return initial_q - final_q(); }

LthResult lth_fit(const Dataset& data, const Hyperparameters& init, const PruneConfig& cfg) {
  cfg.validate();
  if (!init.kernel.is_mixture()) throw UsageError("pruning needs a mixture kernel");
  const std::vector<MixtureComponent> recorded = init.kernel.components();

  LthResult out;
  out.report.threshold = cfg.threshold;
  out.report.initial_q = recorded.size();
  FitResult current = fit(data, init, cfg.inner);
  std::vector<std::size_t> alive(recorded.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;

  for (int r = 1; r <= cfg.rounds; ++r) {
    PruneRound round;
    round.round = r;
    round.nlml_before = current.model.raw_nlml();
    const auto& trained = current.model.params.kernel.components();
    const double y_var = current.model.norm.y_var();

    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < alive.size(); ++k) {
      const double w = trained[k].weight * y_var;
      if (w < cfg.threshold) {
        round.pruned.push_back(alive[k]);
        round.pruned_weights.push_back(w);
      } else {
        keep.push_back(k);
      }
    }
    if (keep.empty()) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < alive.size(); ++k) {
        if (trained[k].weight > trained[best].weight) best = k;
      }
      keep.push_back(best);
      const auto at = std::find(round.pruned.begin(), round.pruned.end(), alive[best]) - round.pruned.begin();
      round.pruned.erase(round.pruned.begin() + at);
      round.pruned_weights.erase(round.pruned_weights.begin() + at);
      round.kept_largest = true;
      out.warnings.push_back("round " + std::to_string(r) + ": every component weight is below " +
                             std::to_string(cfg.threshold) + "; keeping the largest");
    }

    std::vector<std::size_t> next_alive;
    for (std::size_t k : keep) {
      const std::size_t original = alive[k];
      next_alive.push_back(original);
      MixtureComponent c = recorded[original];
      if (cfg.reset == ResetScope::weights_only) {
        c = trained[k];
        c.weight = recorded[original].weight;
      }
      round.restart.push_back(std::move(c));
    }
    alive = std::move(next_alive);
    round.survivors = alive;

    // Noise is global state and keeps its trained value.
    const Hyperparameters restart{init.kernel.with_components(round.restart), current.model.params.noise_var};
    current = fit(data, restart, cfg.inner);
    round.nlml_after = current.model.raw_nlml();
    out.report.rounds.push_back(std::move(round));
  }
  out.model = std::move(current.model);
  out.opt = std::move(current.opt);
  return out;
}

}  // namespace slsm
