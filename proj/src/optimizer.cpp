#include "slsm/optimizer.hpp"

#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <ostream>
#include <random>

#include "slsm/errors.hpp"

namespace slsm {

void OptConfig::validate() const {
  if (max_iters < 1) throw UsageError("max_iters must be >= 1");
  if (memory < 1) throw UsageError("L-BFGS memory must be >= 1");
  if (restarts < 1) throw UsageError("restarts must be >= 1");
  if (!(grad_tol >= 0.0)) throw UsageError("grad_tol must be >= 0");
}

namespace {

constexpr int kMaxLineSearchEvals = 60;

struct LineSearchResult {
  bool ok = false;
  double t = 0.0;
  double f = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd g;
};

bool finite_eval(double f, const Eigen::VectorXd& g) { return std::isfinite(f) && g.allFinite(); }

// Bracketing weak Wolfe search: shrink on insufficient decrease, expand on
// insufficient curvature.
LineSearchResult weak_wolfe(const Objective& objective, const Eigen::VectorXd& x, double f, const Eigen::VectorXd& d,
                            double dg, double t0) {
  LineSearchResult r;
  r.g.resize(x.size());
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double t = t0;
  for (int k = 0; k < kMaxLineSearchEvals; ++k) {
    r.x = x + t * d;
    r.f = objective(r.x, r.g);
    if (!finite_eval(r.f, r.g) || r.f > f + kWolfeC1 * t * dg) {
      hi = t;
    } else if (r.g.dot(d) < kWolfeC2 * dg) {
      lo = t;
    } else {
      r.ok = true;
      r.t = t;
      return r;
    }
    t = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);
    if (!std::isinf(hi) && hi - lo <= 1e-14 * std::max(1.0, hi)) break;
  }
  r.ok = false;
  return r;
}

Eigen::VectorXd two_loop(const Eigen::VectorXd& g, const std::deque<Eigen::VectorXd>& s_hist,
                         const std::deque<Eigen::VectorXd>& y_hist) {
  Eigen::VectorXd q = g;
  const std::size_t m = s_hist.size();
  std::vector<double> alpha(m);
  std::vector<double> rho(m);
  for (std::size_t i = m; i-- > 0;) {
    rho[i] = 1.0 / y_hist[i].dot(s_hist[i]);
    alpha[i] = rho[i] * s_hist[i].dot(q);
    q -= alpha[i] * y_hist[i];
  }
  if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
  for (std::size_t i = 0; i < m; ++i) {
    const double beta = rho[i] * y_hist[i].dot(q);
    q += (alpha[i] - beta) * s_hist[i];
  }
  return -q;
}

}  // namespace

OptResult lbfgs(const Objective& objective, const Eigen::VectorXd& x0, const OptConfig& cfg) {
  cfg.validate();
  OptResult res;
  res.x = x0;
  res.grad.resize(x0.size());
  res.f = objective(res.x, res.grad);
  if (!finite_eval(res.f, res.grad)) throw NumericalError("objective is not finite at the starting point");
  res.trace.push_back({0, res.f, res.grad.lpNorm<Eigen::Infinity>(), 0.0, res.f, 0.0, 0.0, false});

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  res.reason = Termination::max_iterations;
  if (res.trace.front().grad_norm <= cfg.grad_tol) {
    res.reason = Termination::gradient_tolerance;
    return res;
  }

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    Eigen::VectorXd d = two_loop(res.grad, s_hist, y_hist);
    double dg = res.grad.dot(d);
    bool steepest = s_hist.empty();
    if (!(dg < 0.0)) {
      d = -res.grad;
      dg = -res.grad.squaredNorm();
      steepest = true;
    }
    const double first_step = 1.0 / std::max(1.0, res.grad.norm());
    LineSearchResult ls = weak_wolfe(objective, res.x, res.f, d, dg, steepest ? first_step : 1.0);
    if (!ls.ok && !steepest) {
      s_hist.clear();
      y_hist.clear();
      d = -res.grad;
      dg = -res.grad.squaredNorm();
      steepest = true;
      ls = weak_wolfe(objective, res.x, res.f, d, dg, first_step);
    }
    if (!ls.ok) {
      res.reason = Termination::line_search_failure;
      break;
    }

    Eigen::VectorXd s = ls.x - res.x;
    Eigen::VectorXd y = ls.g - res.grad;
    if (s.dot(y) > 1e-300) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      if (static_cast<int>(s_hist.size()) > cfg.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    const double f_prev = res.f;
    const double dg_end = ls.g.dot(d);
    res.x = std::move(ls.x);
    res.f = ls.f;
    res.grad = std::move(ls.g);
    // step_len is the line-search multiplier t along d.
    res.trace.push_back({iter, res.f, res.grad.lpNorm<Eigen::Infinity>(), ls.t, f_prev, dg, dg_end, steepest});
    if (res.grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
      res.reason = Termination::gradient_tolerance;
      break;
    }
  }
  return res;
}

Eigen::VectorXd perturb_start(const TransformedParams& x0, std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 0.1);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  Eigen::VectorXd x = x0.values;
  for (std::size_t i = 0; i < x0.slots.size(); ++i) {
    const auto at = static_cast<Eigen::Index>(i);
    x[at] += x0.slots[i].role == SlotRole::skew ? uniform(rng) : normal(rng);
  }
  return x;
}

OptResult minimize(const Objective& objective, const TransformedParams& x0, const OptConfig& cfg) {
  cfg.validate();
  if (cfg.restarts == 1) {
    OptResult r = lbfgs(objective, x0.values, cfg);
    r.restart_values = {r.f};
    return r;
  }
  std::vector<std::future<OptResult>> runs;
  for (int r = 0; r < cfg.restarts; ++r) {
    Eigen::VectorXd start = r == 0 ? x0.values : perturb_start(x0, cfg.seed, r);
    runs.push_back(std::async(std::launch::async, [&objective, start = std::move(start), &cfg]() {
      return lbfgs(objective, start, cfg);
    }));
  }
  OptResult best;
  std::vector<double> values;
  bool have_best = false;
  std::exception_ptr first_error;
  for (int r = 0; r < cfg.restarts; ++r) {
    try {
      OptResult candidate = runs[static_cast<std::size_t>(r)].get();
      values.push_back(candidate.f);
      if (!have_best || candidate.f < best.f) {
        best = std::move(candidate);
        best.restart_index = r;
        have_best = true;
      }
    } catch (const NumericalError&) {
      // A perturbed start can land where the objective is not finite.
      if (r == 0) first_error = std::current_exception();
      values.push_back(std::numeric_limits<double>::infinity());
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  best.restart_values = std::move(values);
  return best;
}

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace) {
  const auto old = out.precision(17);
  out << "iter,f,grad_norm,step_len\n";
  for (const auto& r : trace) out << r.iter << ',' << r.f << ',' << r.grad_norm << ',' << r.step_len << '\n';
  out.precision(old);
}

}  // namespace slsm
