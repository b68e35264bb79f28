#pragma once

// Unconstrained coordinates for hyper-parameter optimization.
//
// Slot layout: mixture components in order, each as
//   [log w, log mu_1..P, log sigma_1..P, gamma_1..P (SLSM only)]
// or, for the baselines, [log theta_f, log ell, log alpha (RQ only)];
// the log noise variance is always the final slot.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "slsm/kernel.hpp"

namespace slsm {

enum class SlotKind { log, identity };
enum class SlotRole { weight, freq, scale, skew, amplitude, lengthscale, rq_alpha, noise };

struct Slot {
  SlotKind kind;
  SlotRole role;
  int component = -1;  // -1 for non-component slots
};

// Frequencies below this floor are stored at the floor so they stay in the
// log domain; a "zero-frequency" component is represented this way.
inline constexpr double kMinFrequency = 1e-8;

struct TransformedParams {
  Eigen::VectorXd values;
  std::vector<Slot> slots;

  [[nodiscard]] std::size_t size() const { return slots.size(); }
};

[[nodiscard]] std::vector<Slot> slot_layout(const Kernel& kernel);

[[nodiscard]] TransformedParams transform(const Hyperparameters& params);
[[nodiscard]] TransformedParams transform(const SlsmParams& params, KernelType type = KernelType::slsm);

// Rebuilds hyper-parameters of the same shape as `like` from slot values.
[[nodiscard]] Hyperparameters untransform(const Hyperparameters& like, std::span<const double> values);
[[nodiscard]] SlsmParams untransform(const TransformedParams& params, KernelType type = KernelType::slsm);

}  // namespace slsm
