#include "slsm/transform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slsm/errors.hpp"

namespace slsm {

namespace {

double checked_log(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DataError(std::string("cannot log-transform non-positive ") + what + " (" + std::to_string(v) + ")");
  }
  return std::log(v);
}

}  // namespace

std::vector<Slot> slot_layout(const Kernel& kernel) {
  std::vector<Slot> slots;
  if (kernel.is_mixture()) {
    const auto P = kernel.dims();
    for (std::size_t i = 0; i < kernel.num_components(); ++i) {
      const int ci = static_cast<int>(i);
      slots.push_back({SlotKind::log, SlotRole::weight, ci});
      for (std::size_t p = 0; p < P; ++p) slots.push_back({SlotKind::log, SlotRole::freq, ci});
      for (std::size_t p = 0; p < P; ++p) slots.push_back({SlotKind::log, SlotRole::scale, ci});
      if (kernel.has_skew()) {
        for (std::size_t p = 0; p < P; ++p) slots.push_back({SlotKind::identity, SlotRole::skew, ci});
      }
    }
  } else {
    slots.push_back({SlotKind::log, SlotRole::amplitude});
    slots.push_back({SlotKind::log, SlotRole::lengthscale});
    if (kernel.type() == KernelType::rq) slots.push_back({SlotKind::log, SlotRole::rq_alpha});
  }
  slots.push_back({SlotKind::log, SlotRole::noise});
  return slots;
}

TransformedParams transform(const Hyperparameters& params) {
  const Kernel& k = params.kernel;
  TransformedParams out;
  out.slots = slot_layout(k);
  out.values.resize(static_cast<Eigen::Index>(out.slots.size()));
  Eigen::Index at = 0;
  if (k.is_mixture()) {
    for (const auto& c : k.components()) {
      out.values[at++] = checked_log(c.weight, "weight");
      for (Eigen::Index p = 0; p < c.freq.size(); ++p) out.values[at++] = std::log(std::max(c.freq[p], kMinFrequency));
      for (Eigen::Index p = 0; p < c.scale.size(); ++p) out.values[at++] = checked_log(c.scale[p], "scale");
      if (k.has_skew()) {
        for (Eigen::Index p = 0; p < c.skew.size(); ++p) out.values[at++] = c.skew[p];
      }
    }
  } else {
    const auto& b = k.baseline_params();
    out.values[at++] = checked_log(b.amplitude, "amplitude");
    out.values[at++] = checked_log(b.lengthscale, "lengthscale");
    if (k.type() == KernelType::rq) out.values[at++] = checked_log(b.rq_alpha, "rq alpha");
  }
  out.values[at++] = checked_log(params.noise_var, "noise variance");
  return out;
}

TransformedParams transform(const SlsmParams& params, KernelType type) {
  return transform(Hyperparameters{Kernel::from_slsm(type, params), params.noise_var});
}

Hyperparameters untransform(const Hyperparameters& like, std::span<const double> values) {
  const Kernel& k = like.kernel;
  const std::size_t expected = k.num_params() + 1;
  if (values.size() != expected) throw DimensionError(expected, values.size(), "transformed parameter vector");
  std::size_t at = 0;
  Hyperparameters out;
  if (k.is_mixture()) {
    std::vector<MixtureComponent> comps = k.components();
    for (auto& c : comps) {
      c.weight = std::exp(values[at++]);
      for (Eigen::Index p = 0; p < c.freq.size(); ++p) c.freq[p] = std::exp(values[at++]);
      for (Eigen::Index p = 0; p < c.scale.size(); ++p) c.scale[p] = std::exp(values[at++]);
      if (k.has_skew()) {
        for (Eigen::Index p = 0; p < c.skew.size(); ++p) c.skew[p] = values[at++];
      }
    }
    out.kernel = k.with_components(std::move(comps));
  } else {
    BaselineKernelParams b = k.baseline_params();
    b.amplitude = std::exp(values[at++]);
    b.lengthscale = std::exp(values[at++]);
    if (k.type() == KernelType::rq) b.rq_alpha = std::exp(values[at++]);
    out.kernel = Kernel::baseline(b, k.dims());
  }
  out.noise_var = std::exp(values[at++]);
  return out;
}

SlsmParams untransform(const TransformedParams& params, KernelType type) {
  std::size_t q = 0;
  for (const auto& s : params.slots) {
    if (s.role == SlotRole::weight) ++q;
  }
  SlsmParams shape;
  shape.components.assign(q, SlsmComponent{});
  shape.noise_var = 1.0;
  const Hyperparameters like{Kernel::from_slsm(type, shape), 1.0};
  const auto h = untransform(like, std::span<const double>(params.values.data(), static_cast<std::size_t>(params.values.size())));
  return h.kernel.to_slsm(h.noise_var);
}

}  // namespace slsm
