#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "slsm/csv.hpp"
#include "slsm/gp.hpp"
#include "slsm/pruning.hpp"

namespace slsm {

struct ForecastJob {
  double train_frac = 0.6;  // of the row count, rounded down
  KernelType kernel = KernelType::slsm;
  int q = 10;
  std::uint64_t seed = 0;
  bool prune = false;
  PruneConfig prune_cfg;
  std::size_t rbcm_experts = 0;  // 0 trains one exact GP
  int runs = 1;
  VarianceMode variance_mode = VarianceMode::latent;
  OptConfig opt;
  std::filesystem::path out;  // empty: no artifacts

  void validate() const;
};

struct RunOutcome {
  int run = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  double mae = 0.0;
  double smse = 0.0;
  double nlml = 0.0;  // training NLML on the raw target scale
  std::size_t initial_q = 0;
  std::size_t final_q = 0;
  bool spectral = false;
  double runtime_ms = 0.0;
};

struct JobReport {
  std::vector<RunOutcome> runs;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double runtime_ms = 0.0;

  // Mean and sample standard deviation over runs for every metric, plus the
  // wall-clock time under "runtime_ms".
  [[nodiscard]] nlohmann::json metrics_json(const ForecastJob& job) const;
};

// Chronological split: the first floor(train_frac * n) rows train, the rest
// test. Univariate data is ordered by t first.
struct Split {
  Dataset train;
  Dataset test;
};
[[nodiscard]] Split chronological_split(const Dataset& data, double train_frac);

// Runs are independent and execute concurrently with seeds seed, seed+1, ...
// Artifacts go to job.out, suffixed with _run<i> when there are several runs.
[[nodiscard]] JobReport run_job(const ForecastJob& job, const Dataset& data);

}  // namespace slsm
