#include "slsm/rbcm.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>

#include "slsm/errors.hpp"
#include "slsm/transform.hpp"

namespace slsm {

std::vector<std::vector<std::size_t>> partition(std::size_t n, std::size_t M, PartitionStrategy strategy,
                                                std::uint64_t seed) {
  if (M < 1) throw UsageError("partition needs M >= 1");
  if (M > n) throw DataError("cannot split " + std::to_string(n) + " points into " + std::to_string(M) + " experts");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (strategy == PartitionStrategy::random) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<std::size_t>> out(M);
  std::size_t next = 0;
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t count = n / M + (m < n % M ? 1 : 0);
    out[m].assign(order.begin() + static_cast<std::ptrdiff_t>(next),
                  order.begin() + static_cast<std::ptrdiff_t>(next + count));
    std::sort(out[m].begin(), out[m].end());
    next += count;
  }
  return out;
}

std::size_t default_expert_count(std::size_t n) { return std::max<std::size_t>(1, (n + 511) / 512); }

namespace {

template <typename F>
auto run_parallel(std::size_t count, F&& task) {
  using R = decltype(task(std::size_t{0}));
  std::vector<std::future<R>> jobs;
  jobs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) jobs.push_back(std::async(std::launch::async, task, i));
  std::vector<R> out;
  out.reserve(count);
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace

ExpertEnsemble make_ensemble(const Dataset& data, const Hyperparameters& params, const Normalization& norm,
                             std::vector<std::vector<std::size_t>> subsets, BetaMode beta_mode) {
  if (subsets.empty()) throw UsageError("an ensemble needs at least one expert");
  ExpertEnsemble ens;
  ens.params = params;
  ens.norm = norm;
  ens.beta_mode = beta_mode;
  ens.train_fingerprint = fingerprint(data);
  ens.experts = run_parallel(subsets.size(), [&](std::size_t i) {
    if (subsets[i].empty()) throw DataError("expert " + std::to_string(i) + " has no data");
    return condition(data.subset(subsets[i]), params, norm);
  });
  ens.subsets = std::move(subsets);
  return ens;
}

ExpertEnsemble shared_full_data_ensemble(const Dataset& data, const Hyperparameters& params, const Normalization& norm,
                                         std::size_t M, BetaMode beta_mode) {
  if (M < 1) throw UsageError("an ensemble needs at least one expert");
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  ExpertEnsemble ens = make_ensemble(data, params, norm, std::vector<std::vector<std::size_t>>(M, all), beta_mode);
  ens.shared_full_data = true;
  return ens;
}

Objective make_rbcm_objective(const Dataset& normalized, const std::vector<std::vector<std::size_t>>& subsets,
                              const Hyperparameters& shape) {
  std::vector<Dataset> parts;
  parts.reserve(subsets.size());
  for (const auto& s : subsets) parts.push_back(normalized.subset(s));
  return [parts = std::move(parts), shape](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
    try {
      const Hyperparameters h = untransform(shape, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
      struct Piece {
        double f;
        Eigen::VectorXd g;
      };
      const auto pieces = run_parallel(parts.size(), [&](std::size_t i) {
        Piece p;
        p.f = nlml_value_and_grad(parts[i], h, p.g);
        return p;
      });
      grad = Eigen::VectorXd::Zero(x.size());
      double f = 0.0;
      for (const auto& p : pieces) {
        f += p.f;
        grad += p.g;
      }
      return f;
    } catch (const Error&) {
      grad = Eigen::VectorXd::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
      return std::numeric_limits<double>::infinity();
    }
  };
}

RbcmFitResult rbcm_fit(const Dataset& data, const Hyperparameters& init, const OptConfig& opt, const RbcmConfig& cfg) {
  data.validate();
  const std::size_t M = cfg.experts == 0 ? default_expert_count(data.size()) : cfg.experts;
  auto subsets = partition(data.size(), M, cfg.strategy, cfg.seed);
  const Normalization norm = Normalization::fit(data);
  const Dataset nd = norm.apply(data);
  OptResult res = minimize(make_rbcm_objective(nd, subsets, init), transform(init), opt);
  const Hyperparameters best =
      untransform(init, std::span<const double>(res.x.data(), static_cast<std::size_t>(res.x.size())));
  return {make_ensemble(data, best, norm, std::move(subsets), cfg.beta_mode), std::move(res)};
}

Prediction rbcm_predict(const ExpertEnsemble& ens, const Eigen::MatrixXd& Xstar, VarianceMode mode) {
  if (ens.experts.empty()) throw UsageError("ensemble has no experts");
  const auto preds = run_parallel(ens.experts.size(), [&](std::size_t i) { return predict(ens.experts[i], Xstar, mode); });

  // Aggregate on the normalized scale, where the prior mean is zero.
  const double s2 = ens.norm.y_var();
  const double prior = ens.params.kernel.variance() + (mode == VarianceMode::observation ? ens.params.noise_var : 0.0);
  const double log_prior = std::log(prior);
  const double M = static_cast<double>(ens.experts.size());
  const auto m = Xstar.rows();
  Prediction out;
  out.mode = mode;
  out.mean.resize(m);
  out.variance.resize(m);
  std::vector<double> log_terms(ens.experts.size());
  std::vector<double> means(ens.experts.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    double beta_sum = 0.0;
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const double mu = (preds[i].mean[j] - ens.norm.y_mean) / ens.norm.y_std;
      const double var = preds[i].variance[j] / s2;
      if (!std::isfinite(mu) || !std::isfinite(var)) {
        throw NumericalError("expert " + std::to_string(i) + " produced a non-finite prediction");
      }
      // Variances are kept inside (tiny, prior] so every beta is >= 0.
      const double log_var = std::log(std::clamp(var, prior * 1e-300, prior));
      const double beta = ens.beta_mode == BetaMode::uniform ? 1.0 / M : 0.5 * (log_prior - log_var);
      beta_sum += beta;
      log_terms[i] = std::log(beta) - log_var;
      means[i] = mu;
      hi = std::max(hi, log_terms[i]);
    }
    // Precision = sum_i beta_i / var_i + (1 - sum beta) / prior.
    const double correction = 1.0 - beta_sum;
    const double log_corr = correction > 0.0 ? std::log(correction) - log_prior : -std::numeric_limits<double>::infinity();
    hi = std::max(hi, log_corr);
    double pos = std::exp(log_corr - hi);
    for (double t : log_terms) pos += std::exp(t - hi);
    double log_precision = hi + std::log(pos);
    if (correction < 0.0) log_precision += std::log1p(-std::exp(std::log(-correction) - log_prior - log_precision));
    double mean = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) mean += means[i] * std::exp(log_terms[i] - log_precision);
    out.mean[j] = mean * ens.norm.y_std + ens.norm.y_mean;
    out.variance[j] = std::exp(-log_precision) * s2;
  }
  return out;
}

}  // namespace slsm
