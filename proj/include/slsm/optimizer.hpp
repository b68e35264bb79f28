#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "slsm/transform.hpp"

namespace slsm {

struct OptConfig {
  int max_iters = 100;
  int memory = 10;
  double grad_tol = 1e-6;  // on the infinity norm of the gradient
  int restarts = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Line-search constants for the weak Wolfe conditions.
inline constexpr double kWolfeC1 = 1e-4;
inline constexpr double kWolfeC2 = 0.9;

// One accepted step. Iteration 0 records the starting point (step_len 0).
struct IterationRecord {
  int iter = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double step_len = 0.0;
  double f_prev = 0.0;
  double dir_deriv_start = 0.0;  // g(x_k) . d
  double dir_deriv_end = 0.0;    // g(x_k + t d) . d
  bool steepest_descent = false;
};

enum class Termination { gradient_tolerance, max_iterations, line_search_failure };

struct OptResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  std::vector<IterationRecord> trace;
  Termination reason = Termination::max_iterations;
  int restart_index = 0;
  std::vector<double> restart_values;  // best f of every restart, in restart order
};

// Returns f(x) and writes the gradient into `grad` (pre-sized). Non-finite
// return values are treated as failed trial points by the line search.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

// One L-BFGS run from x0.
[[nodiscard]] OptResult lbfgs(const Objective& objective, const Eigen::VectorXd& x0, const OptConfig& cfg);

// L-BFGS with cfg.restarts runs: run 0 starts at x0, later runs at seeded
// perturbations of it (N(0, 0.1^2) on most slots, U(-0.5, 0.5) on skew
// slots). The best run wins; ties go to the lowest restart index.
[[nodiscard]] OptResult minimize(const Objective& objective, const TransformedParams& x0, const OptConfig& cfg);

// Seeded restart starting point, exposed for tests.
[[nodiscard]] Eigen::VectorXd perturb_start(const TransformedParams& x0, std::uint64_t seed, int restart);

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace);

}  // namespace slsm
