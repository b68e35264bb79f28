#include "slsm/gp.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "slsm/errors.hpp"
#include "slsm/transform.hpp"

namespace slsm {

Factorization factorize(const Eigen::MatrixXd& A) {
  const auto n = A.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    return {llt.matrixL(), 0.0};
  }
  const double mean_diag = n > 0 ? A.trace() / static_cast<double>(n) : 1.0;
  const double scale = mean_diag > 0.0 && std::isfinite(mean_diag) ? mean_diag : 1.0;
  double jitter = 0.0;
  for (double eps : kJitterLadder) {
    jitter = eps * scale;
    Eigen::MatrixXd B = A;
    B.diagonal().array() += jitter;
    llt.compute(B);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
  }
  std::ostringstream msg;
  msg << "Cholesky factorization failed after jitter escalation (last jitter tried: " << jitter << ")";
  throw NumericalError(msg.str());
}

namespace {

struct Conditioned {
  Factorization chol;
  Eigen::VectorXd alpha;
};

Conditioned condition_on(const Dataset& data, const Hyperparameters& params) {
  data.validate();
  Eigen::MatrixXd K = gram(data.X, params.kernel);
  K.diagonal().array() += params.noise_var;
  Conditioned c;
  c.chol = factorize(K);
  c.alpha = c.chol.L.triangularView<Eigen::Lower>().solve(data.y);
  c.chol.L.triangularView<Eigen::Lower>().transpose().solveInPlace(c.alpha);
  return c;
}

NlmlBreakdown breakdown_from(const Dataset& data, const Conditioned& c) {
  NlmlBreakdown b;
  b.data_fit = 0.5 * data.y.dot(c.alpha);
  b.complexity = c.chol.L.diagonal().array().log().sum();
  b.constant = 0.5 * static_cast<double>(data.y.size()) * std::log(2.0 * std::numbers::pi);
  b.total = b.data_fit + b.complexity + b.constant;
  b.jitter_used = c.chol.jitter;
  return b;
}

}  // namespace

NlmlBreakdown nlml_breakdown(const Dataset& data, const Hyperparameters& params) {
  return breakdown_from(data, condition_on(data, params));
}

double nlml(const Dataset& data, const Hyperparameters& params) { return nlml_breakdown(data, params).total; }

double nlml_value_and_grad(const Dataset& data, const Hyperparameters& params, Eigen::VectorXd& grad) {
  const Conditioned c = condition_on(data, params);
  const auto n = data.X.rows();
  const auto P = data.X.cols();

  // W = Ky^{-1} - alpha alpha'; dNLML/dtheta = tr(W dKy/dtheta) / 2.
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(n, n);
  c.chol.L.triangularView<Eigen::Lower>().solveInPlace(W);
  c.chol.L.triangularView<Eigen::Lower>().transpose().solveInPlace(W);
  W.noalias() -= c.alpha * c.alpha.transpose();

  const auto nk = params.kernel.num_params();
  grad.setZero(static_cast<Eigen::Index>(nk + 1));
  std::vector<double> dk(nk);
  std::vector<double> lag(static_cast<std::size_t>(P));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      for (Eigen::Index p = 0; p < P; ++p) lag[static_cast<std::size_t>(p)] = data.X(i, p) - data.X(j, p);
      params.kernel.value_and_grad(lag, dk);
      const double w = (i == j ? 0.5 : 1.0) * W(i, j);
      for (std::size_t k = 0; k < nk; ++k) grad[static_cast<Eigen::Index>(k)] += w * dk[k];
    }
  }
  grad[static_cast<Eigen::Index>(nk)] = 0.5 * params.noise_var * W.trace();
  return breakdown_from(data, c).total;
}

Eigen::VectorXd nlml_grad(const Dataset& data, const Hyperparameters& params) {
  Eigen::VectorXd g;
  nlml_value_and_grad(data, params, g);
  return g;
}

double TrainedModel::raw_nlml() const {
  return fit.total + static_cast<double>(y.size()) * std::log(norm.y_std);
}

Hyperparameters denormalize(const Hyperparameters& params, const Normalization& norm) {
  const double s2 = norm.y_var();
  Hyperparameters out = params;
  if (out.kernel.is_mixture()) {
    auto comps = out.kernel.components();
    for (auto& c : comps) c.weight *= s2;
    out.kernel = out.kernel.with_components(std::move(comps));
  } else {
    auto b = out.kernel.baseline_params();
    b.amplitude *= s2;
    out.kernel = Kernel::baseline(b, out.kernel.dims());
  }
  out.noise_var *= s2;
  return out;
}

Hyperparameters TrainedModel::reported_params() const { return denormalize(params, norm); }

TrainedModel condition(const Dataset& data, const Hyperparameters& params, const Normalization& norm) {
  const Dataset nd = norm.apply(data);
  if (nd.dims() != params.kernel.dims()) throw DimensionError(params.kernel.dims(), nd.dims(), "training inputs");
  Conditioned c = condition_on(nd, params);
  TrainedModel m;
  m.params = params;
  m.norm = norm;
  m.X = nd.X;
  m.y = nd.y;
  m.fit = breakdown_from(nd, c);
  m.chol_L = std::move(c.chol.L);
  m.alpha = std::move(c.alpha);
  m.jitter_used = c.chol.jitter;
  m.train_fingerprint = fingerprint(data);
  return m;
}

Prediction predict(const TrainedModel& model, const Eigen::MatrixXd& Xstar, VarianceMode mode) {
  if (static_cast<std::size_t>(Xstar.cols()) != model.params.kernel.dims()) {
    throw DimensionError(model.params.kernel.dims(), Xstar.cols(), "prediction inputs");
  }
  if (!Xstar.allFinite()) throw DataError("prediction inputs contain non-finite values");
  const Eigen::MatrixXd Xs = model.norm.apply_x(Xstar);
  const Eigen::MatrixXd Ks = gram(Xs, model.X, model.params.kernel);  // m x n
  Prediction out;
  out.mode = mode;
  out.mean = Ks * model.alpha;
  Eigen::MatrixXd V = Ks.transpose();
  model.chol_L.triangularView<Eigen::Lower>().solveInPlace(V);
  const double prior = model.params.kernel.variance();
  out.variance = (prior - V.colwise().squaredNorm().array()).matrix().transpose();
  for (Eigen::Index i = 0; i < out.variance.size(); ++i) {
    if (out.variance[i] < 0.0) {
      out.variance[i] = 0.0;
      ++out.clamped;
    }
  }
  if (mode == VarianceMode::observation) out.variance.array() += model.params.noise_var;
  out.mean = (out.mean.array() * model.norm.y_std + model.norm.y_mean).matrix();
  out.variance *= model.norm.y_var();
  return out;
}

Objective make_nlml_objective(const Dataset& normalized, const Hyperparameters& shape) {
  return [&normalized, shape](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
    try {
      const Hyperparameters h = untransform(shape, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
      return nlml_value_and_grad(normalized, h, grad);
    } catch (const Error&) {
      grad.setConstant(std::numeric_limits<double>::quiet_NaN());
      return std::numeric_limits<double>::infinity();
    }
  };
}

FitResult fit(const Dataset& data, const Hyperparameters& init, const OptConfig& cfg) {
  const Normalization norm = Normalization::fit(data);
  const Dataset nd = norm.apply(data);
  const TransformedParams x0 = transform(init);
  const Objective objective = make_nlml_objective(nd, init);
  OptResult opt = minimize(objective, x0, cfg);
  const Hyperparameters best =
      untransform(init, std::span<const double>(opt.x.data(), static_cast<std::size_t>(opt.x.size())));
  return {condition(data, best, norm), std::move(opt)};
}

Eigen::MatrixXd sample_prior(const Kernel& kernel, const Eigen::MatrixXd& X, int n_paths, std::uint64_t seed) {
  if (n_paths < 1) throw UsageError("n_paths must be >= 1");
  const Factorization f = factorize(gram(X, kernel));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd Z(X.rows(), n_paths);
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    for (Eigen::Index i = 0; i < Z.rows(); ++i) Z(i, j) = normal(rng);
  }
  return (f.L.triangularView<Eigen::Lower>() * Z).transpose();
}

}  // namespace slsm
