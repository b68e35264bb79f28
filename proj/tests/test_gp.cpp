#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "slsm/errors.hpp"
#include "slsm/gp.hpp"
#include "slsm/transform.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"

using namespace slsm;

TEST_CASE("nlml single point") {
  const Hyperparameters h{Kernel::from_slsm(KernelType::slsm, SlsmParams{{{1.0, 0.5, 1.0, 0.2}}, 0.0}), 0.0};
  Dataset d = Dataset::series(Eigen::VectorXd::Constant(1, 0.0));
  CHECK(nlml(d, h) == doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(nlml(d, h) == doctest::Approx(0.91894).epsilon(1e-5));
  d.y[0] = 1.0;
  CHECK(nlml(d, h) == doctest::Approx(0.5 + 0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(nlml(d, h) == doctest::Approx(1.41894).epsilon(1e-5));
}

TEST_CASE("nlml matches the dense explicit-inverse oracle") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto prob = testing_support::random_problem(seed, 50, 3);
    Eigen::MatrixXd Ky = testing_support::oracle_gram(prob.data.X, prob.params);
    Ky.diagonal().array() += prob.params.noise_var;
    CHECK(std::abs(nlml(prob.data, prob.params) - oracle::dense_nlml(Ky, prob.data.y)) < 1e-8);
  }
}

TEST_CASE("nlml breakdown terms sum to the total") {
  const auto prob = testing_support::random_problem(3, 30, 2);
  const auto b = nlml_breakdown(prob.data, prob.params);
  CHECK(b.data_fit + b.complexity + b.constant == b.total);
  CHECK(b.without_constant() == b.data_fit + b.complexity);
  CHECK(b.constant == 0.5 * 30 * std::log(2.0 * std::numbers::pi));
  CHECK(b.data_fit > 0.0);
}

TEST_CASE("nlml_grad matches finite differences") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const auto prob = testing_support::random_problem(seed, 30, 3);
    const Eigen::VectorXd g = nlml_grad(prob.data, prob.params);
    const auto x = transform(prob.params);
    REQUIRE(g.size() == x.values.size());
    auto f = [&](const Eigen::VectorXd& v) {
      return nlml(prob.data, untransform(prob.params, std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))));
    };
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      const double fd = testing_support::five_point_difference(f, x.values, j, 1e-4 * std::max(1.0, std::abs(x.values[j])));
      CHECK(testing_support::relative_error(g[j], fd) < 1e-5);
    }
  }
}

TEST_CASE("identical components receive identical gradient blocks") {
  auto prob = testing_support::random_problem(21, 25, 1);
  auto comps = prob.params.kernel.components();
  comps.push_back(comps.front());
  prob.params.kernel = prob.params.kernel.with_components(comps);
  const Eigen::VectorXd g = nlml_grad(prob.data, prob.params);
  const auto stride = static_cast<Eigen::Index>(prob.params.kernel.params_per_component());
  for (Eigen::Index j = 0; j < stride; ++j) CHECK(g[j] == doctest::Approx(g[stride + j]).epsilon(1e-12));
}

TEST_CASE("predict matches the dense oracle") {
  const auto prob = testing_support::random_problem(33, 40, 2);
  const TrainedModel m = condition(prob.data, prob.params, Normalization::identity());
  Eigen::MatrixXd Xs(15, 1);
  for (Eigen::Index i = 0; i < Xs.rows(); ++i) Xs(i, 0) = -3.0 + 2.1 * static_cast<double>(i);
  const Prediction p = predict(m, Xs);

  Eigen::MatrixXd Ky = testing_support::oracle_gram(prob.data.X, prob.params);
  Ky.diagonal().array() += prob.params.noise_var;
  const Eigen::MatrixXd Ks = testing_support::oracle_cross(Xs, prob.data.X, prob.params);
  const Eigen::VectorXd kss = Eigen::VectorXd::Constant(Xs.rows(), prob.params.kernel.variance());
  const auto [mean, var] = oracle::dense_predict(Ky, Ks, kss, prob.data.y);
  CHECK((p.mean - mean).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((p.variance - var).lpNorm<Eigen::Infinity>() < 1e-8);

  const Prediction obs = predict(m, Xs, VarianceMode::observation);
  CHECK((obs.variance - p.variance).isApproxToConstant(prob.params.noise_var, 1e-12));
  CHECK((obs.mean - p.mean).norm() == 0.0);

  CHECK_THROWS_AS((void)predict(m, Eigen::MatrixXd::Zero(3, 2)), DimensionError);
}

TEST_CASE("predict interpolates training points without noise") {
  Eigen::VectorXd y(8);
  y << 0.3, -0.2, 0.9, 1.1, 0.4, -0.5, -0.1, 0.2;
  const Dataset d = Dataset::series(y, 1.0);
  const Hyperparameters h{Kernel::from_slsm(KernelType::slsm, SlsmParams{{{1.0, 0.4, 0.8, 0.1}}, 0.0}), 0.0};
  const TrainedModel m = condition(d, h, Normalization::identity());
  REQUIRE(m.jitter_used == 0.0);
  const Prediction p = predict(m, d.X);
  CHECK((p.mean - y).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(p.variance.maxCoeff() <= 1e-6);
}

TEST_CASE("predict reverts to the prior far from data") {
  const auto prob = testing_support::random_problem(41, 30, 2);
  const TrainedModel m = condition(prob.data, prob.params, Normalization::identity());
  Eigen::MatrixXd far(1, 1);
  far(0, 0) = 1e6;
  const Prediction p = predict(m, far);
  CHECK(std::abs(p.variance[0] - prob.params.kernel.variance()) < 1e-3);
}

TEST_CASE("predictive variance never exceeds the prior") {
  for (std::uint64_t seed = 50; seed < 55; ++seed) {
    const auto prob = testing_support::random_problem(seed, 35, 3);
    const TrainedModel m = condition(prob.data, prob.params, Normalization::identity());
    Eigen::MatrixXd Xs(200, 1);
    for (Eigen::Index i = 0; i < Xs.rows(); ++i) Xs(i, 0) = -20.0 + 0.3 * static_cast<double>(i);
    const Prediction p = predict(m, Xs, VarianceMode::observation);
    const double bound = prob.params.kernel.variance() + prob.params.noise_var;
    CHECK(p.variance.maxCoeff() <= bound + 1e-8);
    CHECK(p.variance.minCoeff() >= 0.0);
  }
}

TEST_CASE("trained model invariants") {
  const auto prob = testing_support::random_problem(61, 45, 3);
  const TrainedModel m = condition(prob.data, prob.params, Normalization::identity());
  Eigen::MatrixXd Ky = gram(prob.data.X, prob.params.kernel);
  Ky.diagonal().array() += prob.params.noise_var + m.jitter_used;
  const Eigen::MatrixXd LLt = m.chol_L * m.chol_L.transpose();
  CHECK((LLt - Ky).cwiseAbs().maxCoeff() <= 1e-8 * Ky.trace());
  const Eigen::VectorXd residual = Ky * m.alpha - prob.data.y;
  CHECK(residual.norm() <= 1e-6 * prob.data.y.norm());
  CHECK(m.train_fingerprint == fingerprint(prob.data));
}

TEST_CASE("jitter escalation is recorded") {
  // Duplicate inputs with zero noise give a singular Gram matrix.
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 1.0, 1.0, 2.0;
  Eigen::VectorXd y(4);
  y << 0.1, 0.2, 0.2, 0.3;
  const Dataset d = Dataset::from_arrays(X, y);
  const Hyperparameters h{Kernel::from_slsm(KernelType::slsm, SlsmParams{{{1.0, 0.2, 0.3, 0.0}}, 0.0}), 0.0};
  const TrainedModel m = condition(d, h, Normalization::identity());
  CHECK(m.jitter_used > 0.0);
  CHECK(m.jitter_used == m.fit.jitter_used);
  CHECK(nlml_breakdown(d, h).jitter_used == m.jitter_used);
}

TEST_CASE("factorize fails loudly on an indefinite matrix") {
  Eigen::Matrix2d A;
  A << 1.0, 0.0, 0.0, -5.0;
  try {
    (void)factorize(A);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("last jitter tried") != std::string::npos);
  }
}

TEST_CASE("normalized fit reproduces direct-scale predictive means") {
  const auto prob = testing_support::random_problem(71, 30, 2);
  Dataset raw = prob.data;
  raw.y = raw.y * 7.5 + Eigen::VectorXd::Constant(raw.y.size(), 40.0);
  const Normalization norm = Normalization::fit(raw);
  const TrainedModel normalized = condition(raw, prob.params, norm);

  // Same model expressed on the centered raw scale.
  Hyperparameters scaled = prob.params;
  auto comps = scaled.kernel.components();
  for (auto& c : comps) c.weight *= norm.y_var();
  scaled.kernel = scaled.kernel.with_components(comps);
  scaled.noise_var *= norm.y_var();
  Normalization centered;
  centered.y_mean = norm.y_mean;
  const TrainedModel direct = condition(raw, scaled, centered);

  Eigen::MatrixXd Xs(20, 1);
  for (Eigen::Index i = 0; i < Xs.rows(); ++i) Xs(i, 0) = 0.77 * static_cast<double>(i);
  const auto a = predict(normalized, Xs);
  const auto b = predict(direct, Xs);
  CHECK((a.mean - b.mean).lpNorm<Eigen::Infinity>() < 1e-10 * std::max(1.0, b.mean.cwiseAbs().maxCoeff()));
  CHECK(((a.variance - b.variance).array().abs() <= 1e-8 * b.variance.array().abs().max(1.0)).all());

  const Hyperparameters reported = normalized.reported_params();
  CHECK(reported.noise_var == doctest::Approx(scaled.noise_var).epsilon(1e-14));
  CHECK(reported.kernel.components()[0].weight == doctest::Approx(scaled.kernel.components()[0].weight).epsilon(1e-14));
  CHECK(normalized.raw_nlml() == doctest::Approx(nlml(direct.norm.apply(raw), scaled)).epsilon(1e-10));
}

TEST_CASE("fit lowers NLML and converges the noise gradient on white noise") {
  std::mt19937_64 rng(81);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd y(60);
  for (auto& v : y) v = n(rng);
  const Dataset d = Dataset::series(y);
  const Hyperparameters init{Kernel::from_slsm(KernelType::slsm, SlsmParams{{{0.3, 0.5, 0.3, 0.1}}, 0.0}), 0.5};
  OptConfig cfg;
  cfg.max_iters = 300;
  cfg.grad_tol = 1e-6;
  const FitResult r = fit(d, init, cfg);
  CHECK(r.opt.f <= r.opt.trace.front().f);
  CHECK(std::abs(r.opt.grad[r.opt.grad.size() - 1]) < 1e-3);
  CHECK(r.model.fit.total == doctest::Approx(r.opt.f).epsilon(1e-12));
}

TEST_CASE("fit works for every kernel family") {
  const auto prob = testing_support::random_problem(91, 40, 2);
  OptConfig cfg;
  cfg.max_iters = 30;
  for (auto type : {KernelType::slsm, KernelType::sm, KernelType::lkp}) {
    const Hyperparameters init{Kernel::from_slsm(type, prob.params.kernel.to_slsm()), 0.1};
    const FitResult r = fit(prob.data, init, cfg);
    CHECK(r.model.params.kernel.type() == type);
    CHECK(r.opt.f <= r.opt.trace.front().f);
  }
  for (auto type : {KernelType::se, KernelType::rq}) {
    const Hyperparameters init{Kernel::baseline({type, 1.0, 2.0, 1.0}), 0.1};
    const FitResult r = fit(prob.data, init, cfg);
    CHECK(r.opt.f <= r.opt.trace.front().f);
  }
}

TEST_CASE("sample_prior") {
  const Kernel k = Kernel::from_slsm(KernelType::slsm, SlsmParams{{{1.0, 0.6, 0.5, 0.3}, {0.5, 0.1, 0.2, -0.2}}, 0.0});
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 0.7, 2.0;
  const int paths = 10000;
  const Eigen::MatrixXd S = sample_prior(k, X, paths, 99);
  REQUIRE(S.rows() == paths);
  REQUIRE(S.cols() == 3);
  const Eigen::MatrixXd emp = (S.transpose() * S) / static_cast<double>(paths);
  const Eigen::MatrixXd K = gram(X, k);
  CHECK((emp - K).cwiseAbs().maxCoeff() <= 5.0 * K.cwiseAbs().maxCoeff() / std::sqrt(static_cast<double>(paths)));

  CHECK(sample_prior(k, X, 5, 7) == sample_prior(k, X, 5, 7));
  CHECK(sample_prior(k, X, 5, 7) != sample_prior(k, X, 5, 8));

  const Kernel zero = Kernel::from_slsm(KernelType::slsm, SlsmParams{{{0.0, 0.6, 0.5, 0.3}}, 0.0});
  const Eigen::MatrixXd Z = sample_prior(zero, X, 100, 3);
  CHECK(Z.cwiseAbs().maxCoeff() < 1e-3);
}
