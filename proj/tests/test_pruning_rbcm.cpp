#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <doctest.h>

#include "slsm/errors.hpp"
#include "slsm/pruning.hpp"
#include "slsm/rbcm.hpp"
#include "slsm/spectral_init.hpp"
#include "slsm/transform.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"

using namespace slsm;

namespace {

Dataset two_component_series(int n, double amplitude, std::uint64_t seed) {
  const Kernel truth = Kernel::from_slsm(KernelType::slsm,
                                         SlsmParams{{{1.0, 0.5, 0.05, 0.2}, {0.6, 1.7, 0.08, -0.3}}, 0.0});
  Eigen::MatrixXd X(n, 1);
  for (int i = 0; i < n; ++i) X(i, 0) = i;
  Eigen::VectorXd y = sample_prior(truth, X, 1, seed).row(0).transpose();
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> z(0.0, 0.1);
  for (auto& v : y) v = amplitude * (v + z(rng));
  return Dataset::series(y, 1.0);
}

PruneConfig quick(double threshold, int rounds) {
  PruneConfig cfg;
  cfg.threshold = threshold;
  cfg.rounds = rounds;
  cfg.inner.max_iters = 25;
  return cfg;
}

}  // namespace

TEST_CASE("lth_fit rewinds survivors bit-identically") {
  const Dataset d = two_component_series(80, 3.0, 5);
  const Hyperparameters init = initialize(Normalization::fit(d).apply(d), KernelType::slsm, 6, 2).params;
  const auto r = lth_fit(d, init, quick(0.5, 2));
  REQUIRE(r.report.rounds.size() == 2);
  std::size_t previous = r.report.initial_q;
  for (const auto& round : r.report.rounds) {
    REQUIRE(round.restart.size() == round.survivors.size());
    for (std::size_t k = 0; k < round.survivors.size(); ++k) {
      const auto& rec = init.kernel.components()[round.survivors[k]];
      CHECK(round.restart[k].weight == rec.weight);
      CHECK(round.restart[k].freq == rec.freq);
      CHECK(round.restart[k].scale == rec.scale);
      CHECK(round.restart[k].skew == rec.skew);
    }
    CHECK(round.survivors.size() <= previous);
    CHECK(round.survivors.size() + round.pruned.size() == previous);
    CHECK(round.survivors.size() >= 1);
    for (double w : round.pruned_weights) CHECK(w < 0.5);
    previous = round.survivors.size();
  }
  CHECK(r.model.params.kernel.num_components() == r.report.final_q());
  CHECK(r.report.total_pruned() == r.report.initial_q - r.report.final_q());
}

TEST_CASE("lth_fit with a zero threshold never prunes") {
  const Dataset d = two_component_series(60, 1.0, 6);
  const Hyperparameters init = initialize(Normalization::fit(d).apply(d), KernelType::slsm, 4, 3).params;
  const auto r = lth_fit(d, init, quick(0.0, 2));
  for (const auto& round : r.report.rounds) {
    CHECK(round.pruned.empty());
    CHECK(round.survivors.size() == 4);
  }
  CHECK(r.warnings.empty());
}

TEST_CASE("lth_fit keeps the largest component when everything is below threshold") {
  const Dataset d = two_component_series(60, 1.0, 7);
  const Hyperparameters init = initialize(Normalization::fit(d).apply(d), KernelType::sm, 3, 4).params;
  const auto r = lth_fit(d, init, quick(1e9, 1));
  REQUIRE(r.report.rounds.size() == 1);
  CHECK(r.report.rounds[0].kept_largest);
  CHECK(r.report.final_q() == 1);
  CHECK(r.report.rounds[0].pruned.size() == 2);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("weights-only rewind keeps the trained shape") {
  const Dataset d = two_component_series(60, 1.0, 8);
  const Hyperparameters init = initialize(Normalization::fit(d).apply(d), KernelType::slsm, 3, 5).params;
  auto cfg = quick(0.0, 1);
  cfg.reset = ResetScope::weights_only;
  const FitResult plain = fit(d, init, cfg.inner);
  const auto r = lth_fit(d, init, cfg);
  const auto& restart = r.report.rounds[0].restart;
  for (std::size_t k = 0; k < restart.size(); ++k) {
    CHECK(restart[k].weight == init.kernel.components()[k].weight);
    CHECK(restart[k].freq == plain.model.params.kernel.components()[k].freq);
  }
}

TEST_CASE("pruning config validation") {
  PruneConfig cfg;
  cfg.rounds = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg.rounds = 1;
  cfg.threshold = -1.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  const Dataset d = two_component_series(20, 1.0, 9);
  const Hyperparameters se{Kernel::baseline({KernelType::se, 1.0, 1.0, 1.0}), 0.1};
  CHECK_THROWS_AS((void)lth_fit(d, se, quick(1.0, 1)), UsageError);
}

TEST_CASE("partition") {
  const auto p = partition(10, 2);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(p[1] == std::vector<std::size_t>{5, 6, 7, 8, 9});

  for (auto strategy : {PartitionStrategy::contiguous, PartitionStrategy::random}) {
    const auto q = partition(103, 7, strategy, 11);
    std::set<std::size_t> seen;
    std::size_t lo = 103;
    std::size_t hi = 0;
    for (const auto& s : q) {
      lo = std::min(lo, s.size());
      hi = std::max(hi, s.size());
      for (auto i : s) CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == 103);
    CHECK(*seen.rbegin() == 102);
    CHECK(hi - lo <= 1);
  }
  CHECK(partition(50, 4, PartitionStrategy::random, 3) == partition(50, 4, PartitionStrategy::random, 3));
  CHECK(partition(50, 4, PartitionStrategy::random, 3) != partition(50, 4, PartitionStrategy::random, 4));
  CHECK_THROWS_AS((void)partition(3, 4), DataError);
  CHECK(default_expert_count(512) == 1);
  CHECK(default_expert_count(513) == 2);
  CHECK(default_expert_count(4096) == 8);
}

TEST_CASE("rBCM objective is the sum of per-subset NLMLs") {
  const auto prob = testing_support::random_problem(5, 60, 2);
  const auto x = transform(prob.params);
  Eigen::VectorXd g;

  const auto one = make_rbcm_objective(prob.data, partition(60, 1), prob.params);
  Eigen::VectorXd g_full;
  const double f_full = nlml_value_and_grad(prob.data, prob.params, g_full);
  CHECK(one(x.values, g) == f_full);
  CHECK(g == g_full);

  const auto subsets = partition(60, 4, PartitionStrategy::random, 1);
  double expected = 0.0;
  for (const auto& s : subsets) {
    const Dataset part = prob.data.subset(s);
    Eigen::MatrixXd Ky = testing_support::oracle_gram(part.X, prob.params);
    Ky.diagonal().array() += prob.params.noise_var;
    expected += oracle::dense_nlml(Ky, part.y);
  }
  const auto four = make_rbcm_objective(prob.data, subsets, prob.params);
  CHECK(std::abs(four(x.values, g) - expected) < 1e-10);
}

TEST_CASE("rBCM with M = 1 reaches the full-GP optimum") {
  const auto prob = testing_support::random_problem(6, 40, 1);
  OptConfig cfg;
  cfg.max_iters = 40;
  const FitResult full = fit(prob.data, prob.params, cfg);
  RbcmConfig rc;
  rc.experts = 1;
  const RbcmFitResult r = rbcm_fit(prob.data, prob.params, cfg, rc);
  CHECK(r.opt.f == full.opt.f);
  CHECK(r.opt.x == full.opt.x);
}

TEST_CASE("identical full-data experts with uniform weights collapse to the full GP") {
  const auto prob = testing_support::random_problem(7, 50, 2);
  const Normalization norm = Normalization::fit(prob.data);
  const TrainedModel full = condition(prob.data, prob.params, norm);
  Eigen::MatrixXd Xs = Eigen::VectorXd::LinSpaced(40, -5.0, 60.0);
  for (auto mode : {VarianceMode::latent, VarianceMode::observation}) {
    const auto ens = shared_full_data_ensemble(prob.data, prob.params, norm, 4, BetaMode::uniform);
    CHECK(ens.shared_full_data);
    const Prediction a = rbcm_predict(ens, Xs, mode);
    const Prediction b = predict(full, Xs, mode);
    CHECK((a.mean - b.mean).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK((a.variance - b.variance).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("rBCM aggregate properties") {
  const auto prob = testing_support::random_problem(8, 80, 2);
  const Normalization norm = Normalization::fit(prob.data);
  auto subsets = partition(80, 4);
  const auto ens = make_ensemble(prob.data, prob.params, norm, subsets);
  Eigen::MatrixXd Xs = Eigen::VectorXd::LinSpaced(60, -10.0, 90.0);
  const Prediction p = rbcm_predict(ens, Xs);
  CHECK(p.variance.minCoeff() > 0.0);
  // Precision is at least the prior precision's share, and never below 1/prior.
  const double prior = prob.params.kernel.variance() * norm.y_var();
  CHECK(p.variance.maxCoeff() <= prior * (1.0 + 1e-12));

  std::reverse(subsets.begin(), subsets.end());
  const auto reversed = make_ensemble(prob.data, prob.params, norm, subsets);
  const Prediction q = rbcm_predict(reversed, Xs);
  CHECK((p.mean - q.mean).lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, p.mean.cwiseAbs().maxCoeff()));
  CHECK((p.variance - q.variance).lpNorm<Eigen::Infinity>() <= 1e-12 * prior);

  Eigen::MatrixXd far(1, 1);
  far(0, 0) = 1e7;
  const Prediction f = rbcm_predict(ens, far);
  CHECK(f.variance[0] == doctest::Approx(prior).epsilon(1e-6));
  CHECK(f.mean[0] == doctest::Approx(norm.y_mean).epsilon(1e-6));
}
