#include "slsm/kernel.hpp"

#include <cmath>

#include "component_math.hpp"
#include "slsm/errors.hpp"

namespace slsm {

namespace {

detail::LagTerms component_terms(std::span<const double> lag, const MixtureComponent& c) {
  detail::LagTerms t;
  double r2 = 0.0;
  for (std::size_t p = 0; p < lag.size(); ++p) {
    const auto i = static_cast<Eigen::Index>(p);
    t.phase += lag[p] * c.freq[i];
    t.skew += lag[p] * c.skew[i];
    t.half_quad += 0.5 * c.scale[i] * c.scale[i] * lag[p] * lag[p];
    r2 += lag[p] * lag[p];
  }
  t.r = std::sqrt(r2);
  if (t.r > kLargeLag || !std::isfinite(t.r)) {
    const Eigen::Map<const Eigen::VectorXd> v(lag.data(), static_cast<Eigen::Index>(lag.size()));
    t.r = v.stableNorm();
    for (std::size_t p = 0; p < lag.size(); ++p) {
      const double u = lag[p] / t.r;
      t.half_quad_unit += 0.5 * c.scale[static_cast<Eigen::Index>(p)] * c.scale[static_cast<Eigen::Index>(p)] * u * u;
    }
  }
  return t;
}

}  // namespace

Kernel Kernel::mixture(KernelType type, std::vector<MixtureComponent> components) {
  if (!slsm::is_mixture(type)) throw UsageError("Kernel::mixture requires slsm, sm or lkp");
  Kernel k;
  k.type_ = type;
  k.components_ = std::move(components);
  k.dims_ = k.components_.empty() ? 1 : k.components_.front().dims();
  for (auto& c : k.components_) {
    if (c.skew.size() == 0) c.skew = Eigen::VectorXd::Zero(c.freq.size());
    if (type != KernelType::slsm) c.skew.setZero();
  }
  k.validate();
  return k;
}

Kernel Kernel::baseline(const BaselineKernelParams& params, std::size_t dims) {
  params.validate();
  Kernel k;
  k.type_ = params.variant;
  k.dims_ = dims;
  k.baseline_ = params;
  return k;
}

Kernel Kernel::from_slsm(KernelType type, const SlsmParams& params) {
  std::vector<MixtureComponent> comps;
  comps.reserve(params.components.size());
  for (const auto& c : params.components) {
    comps.push_back({c.weight, Eigen::VectorXd::Constant(1, c.freq), Eigen::VectorXd::Constant(1, c.scale),
                     Eigen::VectorXd::Constant(1, c.skew)});
  }
  return mixture(type, std::move(comps));
}

Kernel Kernel::with_components(std::vector<MixtureComponent> components) const {
  return mixture(type_, std::move(components));
}

SlsmParams Kernel::to_slsm(double noise_var) const {
  if (!is_mixture() || dims_ != 1) throw UsageError("to_slsm requires a univariate mixture kernel");
  SlsmParams p;
  p.noise_var = noise_var;
  for (const auto& c : components_) p.components.push_back({c.weight, c.freq[0], c.scale[0], c.skew[0]});
  return p;
}

void Kernel::validate() const {
  if (!is_mixture()) {
    baseline_.validate();
    return;
  }
  if (components_.empty()) throw DataError("a mixture kernel needs at least one component");
  for (const auto& c : components_) {
    if (c.dims() != dims_) throw DimensionError(dims_, c.dims(), "mixture component frequency");
    if (static_cast<std::size_t>(c.scale.size()) != dims_) throw DimensionError(dims_, c.scale.size(), "mixture component scale");
    if (static_cast<std::size_t>(c.skew.size()) != dims_) throw DimensionError(dims_, c.skew.size(), "mixture component skew");
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) throw DataError("component weight must be finite and >= 0");
    if (!(c.freq.array() >= 0.0).all() || !c.freq.allFinite()) throw DataError("component frequencies must be finite and >= 0");
    if (!(c.scale.array() > 0.0).all() || !c.scale.allFinite()) throw DataError("component scales must be finite and > 0");
    if (!c.skew.allFinite()) throw DataError("component skews must be finite");
  }
}

double Kernel::operator()(std::span<const double> lag) const {
  if (lag.size() != dims_) throw DimensionError(dims_, lag.size(), "kernel lag");
  if (!is_mixture()) {
    double r2 = 0.0;
    for (double v : lag) r2 += v * v;
    return baseline_kernel(std::sqrt(r2), baseline_);
  }
  double sum = 0.0;
  for (const auto& c : components_) {
    const auto t = component_terms(lag, c);
    sum += c.weight * (type_ == KernelType::sm ? detail::sm_value(t) : detail::slsm_value(t));
  }
  return sum;
}

double Kernel::variance() const {
  if (!is_mixture()) return baseline_.amplitude;
  double sum = 0.0;
  for (const auto& c : components_) sum += c.weight;
  return sum;
}

std::size_t Kernel::params_per_component() const {
  if (!is_mixture()) return 0;
  return 1 + 2 * dims_ + (has_skew() ? dims_ : 0);
}

std::size_t Kernel::num_params() const {
  if (!is_mixture()) return baseline_.variant == KernelType::rq ? 3 : 2;
  return params_per_component() * components_.size();
}

double Kernel::value_and_grad(std::span<const double> lag, std::span<double> grad) const {
  if (!is_mixture()) {
    double r2 = 0.0;
    for (double v : lag) r2 += v * v;
    const double l2 = baseline_.lengthscale * baseline_.lengthscale;
    if (baseline_.variant == KernelType::se) {
      const double k = baseline_.amplitude * std::exp(-r2 / (2.0 * l2));
      grad[0] = k;
      grad[1] = k * r2 / l2;
      return k;
    }
    const double alpha = baseline_.rq_alpha;
    const double u = r2 / (2.0 * alpha * l2);
    const double k = baseline_.amplitude * std::pow(1.0 + u, -alpha);
    grad[0] = k;
    grad[1] = k * 2.0 * alpha * u / (1.0 + u);
    grad[2] = k * alpha * (-std::log1p(u) + u / (1.0 + u));
    return k;
  }

  const std::size_t stride = params_per_component();
  const std::size_t P = dims_;
  double sum = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    double* g = grad.data() + i * stride;
    const auto t = component_terms(lag, c);
    if (type_ == KernelType::sm) {
      const double env = std::exp(-t.half_quad);
      const double value = std::cos(t.phase) * env;
      const double d_phase = -std::sin(t.phase) * env;
      g[0] = c.weight * value;
      for (std::size_t p = 0; p < P; ++p) {
        const auto ip = static_cast<Eigen::Index>(p);
        const double s2t2 = c.scale[ip] * c.scale[ip] * lag[p] * lag[p];
        g[1 + p] = c.weight * d_phase * c.freq[ip] * lag[p];
        g[1 + P + p] = -c.weight * value * s2t2;
      }
      sum += c.weight * value;
      continue;
    }
    const auto d = detail::slsm_partials(t);
    g[0] = c.weight * d.value;
    for (std::size_t p = 0; p < P; ++p) {
      const auto ip = static_cast<Eigen::Index>(p);
      g[1 + p] = c.weight * d.d_phase * c.freq[ip] * lag[p];
      g[1 + P + p] = c.weight * d.d_c * c.scale[ip] * c.scale[ip] * lag[p] * lag[p];
      if (has_skew()) g[1 + 2 * P + p] = c.weight * d.d_skew * lag[p];
    }
    sum += c.weight * d.value;
  }
  return sum;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2, const Kernel& kernel) {
  if (X1.cols() != X2.cols()) throw DimensionError(X1.cols(), X2.cols(), "gram input columns");
  if (static_cast<std::size_t>(X1.cols()) != kernel.dims()) throw DimensionError(kernel.dims(), X1.cols(), "gram input columns");
  if (!X1.allFinite() || !X2.allFinite()) throw DataError("gram: non-finite input");
  const auto P = X1.cols();
  Eigen::MatrixXd K(X1.rows(), X2.rows());
  std::vector<double> lag(static_cast<std::size_t>(P));
  for (Eigen::Index i = 0; i < X1.rows(); ++i) {
    for (Eigen::Index j = 0; j < X2.rows(); ++j) {
      for (Eigen::Index p = 0; p < P; ++p) lag[static_cast<std::size_t>(p)] = X1(i, p) - X2(j, p);
      K(i, j) = kernel(lag);
    }
  }
  return K;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const Kernel& kernel) {
  if (static_cast<std::size_t>(X.cols()) != kernel.dims()) throw DimensionError(kernel.dims(), X.cols(), "gram input columns");
  if (!X.allFinite()) throw DataError("gram: non-finite input");
  const auto n = X.rows();
  const auto P = X.cols();
  Eigen::MatrixXd K(n, n);
  std::vector<double> lag(static_cast<std::size_t>(P));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      for (Eigen::Index p = 0; p < P; ++p) lag[static_cast<std::size_t>(p)] = X(i, p) - X(j, p);
      K(i, j) = kernel(lag);
      K(j, i) = K(i, j);
    }
  }
  return K;
}

}  // namespace slsm
