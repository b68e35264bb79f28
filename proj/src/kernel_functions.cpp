#include "slsm/kernel_functions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "component_math.hpp"
#include "slsm/errors.hpp"
#include "slsm/kernel.hpp"

namespace slsm {

std::string_view to_string(KernelType type) {
  switch (type) {
    case KernelType::slsm: return "slsm";
    case KernelType::sm: return "sm";
    case KernelType::lkp: return "lkp";
    case KernelType::se: return "se";
    case KernelType::rq: return "rq";
  }
  return "unknown";
}

KernelType kernel_type_from_string(std::string_view name) {
  for (auto t : {KernelType::slsm, KernelType::sm, KernelType::lkp, KernelType::se, KernelType::rq}) {
    if (to_string(t) == name) return t;
  }
  throw UsageError("unknown kernel type '" + std::string(name) + "' (expected slsm, sm, lkp, se or rq)");
}

bool is_mixture(KernelType type) {
  return type == KernelType::slsm || type == KernelType::sm || type == KernelType::lkp;
}

double SlsmComponent::kappa() const {
  const double root = std::sqrt(2.0 * scale * scale + skew * skew);
  if (skew >= 0.0) return std::numbers::sqrt2 * scale / (skew + root);
  return (root - skew) / (std::numbers::sqrt2 * scale);
}

void SlsmComponent::validate() const {
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw DataError("component weight must be finite and >= 0");
  if (!(freq >= 0.0) || !std::isfinite(freq)) throw DataError("component frequency must be finite and >= 0");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DataError("component scale must be finite and > 0");
  if (!std::isfinite(skew)) throw DataError("component skew must be finite");
}

void SlsmParams::validate() const {
  if (components.empty()) throw DataError("a mixture needs at least one component");
  for (const auto& c : components) c.validate();
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) throw DataError("noise variance must be finite and >= 0");
}

void MultiSlsmComponent::validate() const {
  if (freq.size() < 1) throw DataError("multivariate component needs P >= 1");
  if (scale2.size() != freq.size()) throw DimensionError(dims(), scale2.size(), "scale2 vector");
  if (skew.size() != freq.size()) throw DimensionError(dims(), skew.size(), "skew vector");
  if (!(weight >= 0.0)) throw DataError("component weight must be >= 0");
  if ((freq.array() < 0.0).any()) throw DataError("component frequencies must be >= 0");
  if ((scale2.array() <= 0.0).any()) throw DataError("component scale2 entries must be > 0");
}

void BaselineKernelParams::validate() const {
  if (variant != KernelType::se && variant != KernelType::rq) throw UsageError("baseline kernel must be se or rq");
  if (!(amplitude > 0.0) || !(lengthscale > 0.0) || !(rq_alpha > 0.0)) {
    throw DataError("baseline kernel parameters must be strictly positive");
  }
}

namespace {

detail::LagTerms scalar_terms(double tau, const SlsmComponent& c) {
  const double half_s2 = 0.5 * c.scale * c.scale;
  return {c.freq * tau, c.skew * tau, half_s2 * tau * tau, std::abs(tau), half_s2};
}

}  // namespace

double slsm_component(double tau, const SlsmComponent& c) { return detail::slsm_value(scalar_terms(tau, c)); }

double slsm_kernel(double tau, const SlsmParams& p) {
  double sum = 0.0;
  for (const auto& c : p.components) sum += c.weight * slsm_component(tau, c);
  return sum;
}

double slsm_kernel_multi(std::span<const double> tau, const MultiSlsmComponent& c) {
  if (tau.size() != c.dims()) throw DimensionError(c.dims(), tau.size(), "slsm_kernel_multi lag");
  const Eigen::Map<const Eigen::VectorXd> lag(tau.data(), static_cast<Eigen::Index>(tau.size()));
  detail::LagTerms t;
  t.phase = lag.dot(c.freq);
  t.skew = lag.dot(c.skew);
  t.half_quad = 0.5 * lag.cwiseAbs2().dot(c.scale2);
  t.r = lag.stableNorm();
  if (t.r > kLargeLag) t.half_quad_unit = 0.5 * (lag / t.r).cwiseAbs2().dot(c.scale2);
  return detail::slsm_value(t);
}

double sm_kernel(double tau, const SlsmParams& p) {
  double sum = 0.0;
  for (const auto& c : p.components) sum += c.weight * detail::sm_value(scalar_terms(tau, c));
  return sum;
}

double lkp_kernel(double tau, const SlsmParams& p) {
  SlsmParams symmetric = p;
  for (auto& c : symmetric.components) c.skew = 0.0;
  return slsm_kernel(tau, symmetric);
}

double baseline_kernel(double tau, const BaselineKernelParams& b) {
  const double r2 = tau * tau;
  const double l2 = b.lengthscale * b.lengthscale;
  if (b.variant == KernelType::rq) return b.amplitude * std::pow(1.0 + r2 / (2.0 * b.rq_alpha * l2), -b.rq_alpha);
  return b.amplitude * std::exp(-r2 / (2.0 * l2));
}

double skewed_laplace_density(double s, const SlsmComponent& c) {
  const double k = c.kappa();
  const double coef = std::numbers::sqrt2 / c.scale * k / (1.0 + k * k);
  if (s < c.freq) return coef * std::exp(-std::numbers::sqrt2 / (c.scale * k) * (c.freq - s));
  return coef * std::exp(-std::numbers::sqrt2 * k / c.scale * (s - c.freq));
}

double spectral_density(double s, const SlsmComponent& c) {
  return 0.5 * (skewed_laplace_density(s, c) + skewed_laplace_density(-s, c));
}

double spectral_density(double s, KernelType type, const SlsmComponent& c) {
  switch (type) {
    case KernelType::slsm: return spectral_density(s, c);
    case KernelType::lkp: {
      SlsmComponent symmetric = c;
      symmetric.skew = 0.0;
      return spectral_density(s, symmetric);
    }
    case KernelType::sm: {
      const double norm = 1.0 / (c.scale * std::sqrt(2.0 * std::numbers::pi));
      const double zp = (s - c.freq) / c.scale;
      const double zm = (s + c.freq) / c.scale;
      return 0.5 * norm * (std::exp(-0.5 * zp * zp) + std::exp(-0.5 * zm * zm));
    }
    default: throw UsageError("spectral density is defined for mixture kernels only");
  }
}

std::vector<double> kernel_grad(double tau, const SlsmParams& p) {
  const Kernel k = Kernel::from_slsm(KernelType::slsm, p);
  std::vector<double> grad(k.num_params());
  k.value_and_grad(std::span<const double>(&tau, 1), grad);
  return grad;
}

}  // namespace slsm
