#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "slsm/errors.hpp"
#include "slsm/kernel.hpp"
#include "slsm/kernel_functions.hpp"
#include "slsm/transform.hpp"
#include "support/oracles.hpp"

using namespace slsm;

namespace {

SlsmComponent random_component(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mu(0.0, 3.0);
  std::uniform_real_distribution<double> sigma(0.1, 2.0);
  std::uniform_real_distribution<double> gamma(-1.0, 1.0);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  return {w(rng), mu(rng), sigma(rng), gamma(rng)};
}

}  // namespace

TEST_CASE("slsm_component is exactly one at zero lag") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) CHECK(slsm_component(0.0, random_component(rng)) == 1.0);
}

TEST_CASE("slsm_component without skew is a cosine times a Cauchy envelope") {
  const SlsmComponent c{1.0, 0.7, 1.3, 0.0};
  for (double tau : {0.1, 0.5, 2.0, 7.0}) {
    CHECK(slsm_component(tau, c) == doctest::Approx(std::cos(0.7 * tau) / (1.0 + 0.5 * 1.69 * tau * tau)).epsilon(1e-14));
  }
  // Zero frequency: RQ with alpha = 1, theta_f = 1, ell^-2 = sigma^2.
  const SlsmComponent flat{1.0, 0.0, 1.3, 0.0};
  const BaselineKernelParams rq{KernelType::rq, 1.0, 1.0 / 1.3, 1.0};
  for (double tau = -5.0; tau <= 5.0; tau += 0.25) {
    CHECK(slsm_component(tau, flat) == doctest::Approx(baseline_kernel(tau, rq)).epsilon(1e-14));
  }
}

TEST_CASE("slsm_component matches inverse Fourier quadrature of the symmetrized density") {
  const SlsmComponent c{1.0, 0.5, 1.0, 0.3};
  const double closed = slsm_component(1.0, c);
  const double quad = oracle::slsm_by_quadrature(1.0, 0.5, 1.0, 0.3);
  CHECK(std::abs(closed - quad) < 1e-6);
}

TEST_CASE("slsm_component stays bounded and even") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 30; ++i) {
    const auto c = random_component(rng);
    for (double tau = 0.0; tau < 60.0; tau += 0.037) {
      const double v = slsm_component(tau, c);
      CHECK(std::abs(v) <= 1.0);
      CHECK(v == slsm_component(-tau, c));
    }
  }
}

TEST_CASE("slsm_component large-lag branch is continuous and finite") {
  const SlsmComponent c{1.0, 0.3, 0.5, 0.4};
  const double below = slsm_component(std::nextafter(kLargeLag, 0.0), c);
  const double above = slsm_component(std::nextafter(kLargeLag, 1e9), c);
  CHECK(std::abs(below - above) < 1e-15);
  for (double tau : {1e8, 1e12, 1e100, 1e200}) {
    const double v = slsm_component(tau, c);
    CHECK(std::isfinite(v));
    CHECK(std::abs(v) <= 2.0 / (c.scale * c.scale * tau * tau) + 1e-300);
  }
}

TEST_CASE("slsm_kernel sums weighted components") {
  SlsmParams p;
  p.components = {{1.0, 0.1, 0.5, 0.2}, {2.0, 1.0, 0.3, -0.1}, {3.0, 2.0, 1.0, 0.0}};
  CHECK(slsm_kernel(0.0, p) == 6.0);

  SlsmParams cauchy;
  cauchy.components = {{1.0, 0.0, std::sqrt(2.0), 0.0}};
  for (double tau : {0.0, 0.3, 1.0, 4.0}) CHECK(slsm_kernel(tau, cauchy) == doctest::Approx(1.0 / (1.0 + tau * tau)).epsilon(1e-14));

  std::mt19937_64 rng(3);
  SlsmParams two;
  two.components = {random_component(rng), random_component(rng)};
  const double sum = two.components[0].weight * oracle::slsm_by_quadrature(2.0, two.components[0].freq, two.components[0].scale, two.components[0].skew) +
                     two.components[1].weight * oracle::slsm_by_quadrature(2.0, two.components[1].freq, two.components[1].scale, two.components[1].skew);
  CHECK(std::abs(slsm_kernel(2.0, two) - sum) < 1e-6);
  CHECK(slsm_kernel(2.0, two) == two.components[0].weight * slsm_component(2.0, two.components[0]) +
                                     two.components[1].weight * slsm_component(2.0, two.components[1]));
}

TEST_CASE("slsm_kernel_multi") {
  MultiSlsmComponent c;
  c.freq = Eigen::Vector2d(0.3, 0.4);
  c.scale2 = Eigen::Vector2d(1.0, 1.0);
  c.skew = Eigen::Vector2d(0.1, -0.1);
  const double zero[2] = {0.0, 0.0};
  CHECK(slsm_kernel_multi(zero, c) == 1.0);

  // tau . gamma = 0, C = 1 + (1 + 1) / 2 = 2.
  const double ones[2] = {1.0, 1.0};
  CHECK(slsm_kernel_multi(ones, c) == doctest::Approx(std::cos(0.7) / 2.0).epsilon(1e-14));

  const double three[3] = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS((void)slsm_kernel_multi(three, c), DimensionError);
  try {
    (void)slsm_kernel_multi(three, c);
  } catch (const DimensionError& e) {
    CHECK(e.expected() == 2);
    CHECK(e.actual() == 3);
  }

  std::mt19937_64 rng(11);
  for (int i = 0; i < 10; ++i) {
    const auto s = random_component(rng);
    MultiSlsmComponent m;
    m.freq = Eigen::VectorXd::Constant(1, s.freq);
    m.scale2 = Eigen::VectorXd::Constant(1, s.scale * s.scale);
    m.skew = Eigen::VectorXd::Constant(1, s.skew);
    for (double tau : {-3.0, 0.2, 1.7, 25.0}) CHECK(slsm_kernel_multi(std::span(&tau, 1), m) == doctest::Approx(slsm_component(tau, s)).epsilon(1e-13));
  }
}

TEST_CASE("sm_kernel") {
  SlsmParams p;
  p.components = {{1.5, 0.0, 0.8, 0.0}, {0.5, 1.0, 0.2, 0.9}};
  CHECK(sm_kernel(0.0, p) == 2.0);

  SlsmParams se;
  se.components = {{2.0, 0.0, 0.8, 0.0}};
  CHECK(sm_kernel(1.5, se) == doctest::Approx(2.0 * std::exp(-0.5 * 0.64 * 2.25)).epsilon(1e-14));

  SlsmParams one;
  one.components = {{1.0, 2.0 * std::numbers::pi * 0.1, 0.5, 0.0}};
  const double mu = one.components[0].freq;
  const double quad = oracle::inverse_fourier([&](double s) { return oracle::symmetrized_gaussian(s, mu, 0.5); }, 1.0, mu,
                                              oracle::integration_half_width(mu, 0.5, 0.0));
  CHECK(std::abs(sm_kernel(1.0, one) - quad) < 1e-6);
}

TEST_CASE("lkp_kernel delegates to slsm_kernel with zero skew") {
  std::mt19937_64 rng(5);
  SlsmParams p;
  for (int i = 0; i < 4; ++i) {
    auto c = random_component(rng);
    c.skew = 0.0;
    p.components.push_back(c);
  }
  for (double tau = -10.0; tau <= 10.0; tau += 0.1) CHECK(lkp_kernel(tau, p) == slsm_kernel(tau, p));
  CHECK(lkp_kernel(0.0, p) == doctest::Approx(p.components[0].weight + p.components[1].weight + p.components[2].weight + p.components[3].weight));

  SlsmParams single;
  single.components = {{1.0, 1.0, 1.0, 0.0}};
  CHECK(lkp_kernel(1.0, single) == doctest::Approx(std::cos(1.0) / 1.5).epsilon(1e-15));
  CHECK(std::abs(lkp_kernel(1.0, single) - oracle::slsm_by_quadrature(1.0, 1.0, 1.0, 0.0)) < 1e-6);
}

TEST_CASE("baseline kernels") {
  const BaselineKernelParams rq{KernelType::rq, 2.5, 0.7, 3.0};
  CHECK(baseline_kernel(0.0, rq) == 2.5);
  const BaselineKernelParams se{KernelType::se, 1.0, 1.2, 1.0};
  const BaselineKernelParams rq_limit{KernelType::rq, 1.0, 1.2, 1e6};
  for (double tau = 0.0; tau <= 5.0; tau += 0.01) CHECK(std::abs(baseline_kernel(tau, rq_limit) - baseline_kernel(tau, se)) < 1e-4);
}

TEST_CASE("spectral_density") {
  CHECK(SlsmComponent{1.0, 0.5, 1.0, 0.0}.kappa() == 1.0);
  CHECK(spectral_density(0.0, SlsmComponent{1.0, 0.0, std::sqrt(2.0), 0.0}) == doctest::Approx(0.5).epsilon(1e-15));

  std::mt19937_64 rng(13);
  for (int i = 0; i < 10; ++i) {
    const auto c = random_component(rng);
    const double hw = oracle::integration_half_width(c.freq, c.scale, c.skew);
    const double mass = oracle::integrate_pieces([&](double s) { return spectral_density(s, c); },
                                                 {-hw, -c.freq, 0.0, c.freq, hw}, 1e-11);
    CHECK(std::abs(mass - 1.0) < 1e-8);
    for (double s = -8.0; s <= 8.0; s += 0.173) {
      CHECK(spectral_density(s, c) >= 0.0);
      CHECK(spectral_density(s, c) == spectral_density(-s, c));
      CHECK(spectral_density(s, c) == doctest::Approx(oracle::symmetrized_skewed_laplace(s, c.freq, c.skew, c.scale)).epsilon(1e-12));
    }
  }
  // Strongly negative skew stays accurate (no cancellation in kappa).
  const SlsmComponent neg{1.0, 1.0, 1e-3, -50.0};
  CHECK(std::isfinite(neg.kappa()));
  CHECK(neg.kappa() > 0.0);
}

TEST_CASE("gram") {
  const Kernel k = Kernel::from_slsm(KernelType::slsm, SlsmParams{{{1.0, 0.3, 0.5, 0.2}}, 0.0});
  Eigen::MatrixXd one(1, 1);
  one << 3.0;
  const Eigen::MatrixXd K1 = gram(one, k);
  CHECK(K1.rows() == 1);
  CHECK(K1(0, 0) == k(0.0));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  Eigen::MatrixXd X(40, 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, 0) = u(rng);
  const Eigen::MatrixXd K = gram(X, k);
  CHECK(K == K.transpose());
  CHECK(gram(X, X, k).isApprox(K, 1e-15));

  Eigen::MatrixXd bad = X;
  bad(3, 0) = std::nan("");
  CHECK_THROWS_AS((void)gram(bad, k), DataError);

  SlsmParams p;
  for (int i = 0; i < 3; ++i) p.components.push_back(random_component(rng));
  const Kernel big = Kernel::from_slsm(KernelType::slsm, p);
  Eigen::MatrixXd X200(200, 1);
  for (Eigen::Index i = 0; i < X200.rows(); ++i) X200(i, 0) = u(rng);
  const Eigen::MatrixXd K200 = gram(X200, big);
  CHECK(oracle::min_eigenvalue(K200) >= -1e-8 * K200.trace() / 200.0);
}

TEST_CASE("kernel_grad matches central finite differences") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> lag(-6.0, 6.0);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SlsmParams p;
    p.components = {random_component(rng), random_component(rng)};
    p.noise_var = 0.1;
    const double tau = lag(rng);
    const auto analytic = kernel_grad(tau, p);
    const TransformedParams x = transform(p);
    auto f = [&](const Eigen::VectorXd& v) {
      TransformedParams t = x;
      t.values = v;
      return slsm_kernel(tau, untransform(t));
    };
    for (Eigen::Index j = 0; j + 1 < x.values.size(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x.values[j]));
      const double fd = oracle::central_difference(f, x.values, j, h);
      const double a = analytic[static_cast<std::size_t>(j)];
      // Relative error against the larger magnitude; absolute floor for near-zero partials.
      CHECK(std::abs(a - fd) <= 1e-5 * std::max(std::abs(a), 1e-3));
      ++checked;
    }
  }
  CHECK(checked == 100 * 8);
}

TEST_CASE("kernel_grad special cases") {
  SlsmParams p;
  p.components = {{2.0, 0.5, 0.7, 0.0}, {1.0, 1.5, 0.3, 0.4}};
  const auto g0 = kernel_grad(0.0, p);
  // d k / d log w = w * component(0) = w; so d k / d w = 1.
  CHECK(g0[0] / p.components[0].weight == 1.0);
  CHECK(g0[4] / p.components[1].weight == 1.0);
  CHECK(g0[3] == 0.0);  // d k / d gamma at tau = 0
  CHECK(g0[7] == 0.0);
}

TEST_CASE("Kernel gradients for every family match finite differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  std::uniform_real_distribution<double> s(-1.0, 1.0);
  std::vector<Kernel> kernels;
  for (auto type : {KernelType::slsm, KernelType::sm, KernelType::lkp}) {
    std::vector<MixtureComponent> comps;
    for (int i = 0; i < 2; ++i) comps.push_back({u(rng), Eigen::Vector2d(u(rng), u(rng)), Eigen::Vector2d(u(rng), u(rng)), Eigen::Vector2d(s(rng), s(rng))});
    kernels.push_back(Kernel::mixture(type, comps));
  }
  kernels.push_back(Kernel::baseline({KernelType::se, 1.3, 0.8, 1.0}, 2));
  kernels.push_back(Kernel::baseline({KernelType::rq, 1.3, 0.8, 2.5}, 2));
  for (const auto& k : kernels) {
    const Hyperparameters h{k, 0.2};
    const auto x = transform(h);
    const double lag[2] = {0.7, -1.3};
    std::vector<double> grad(k.num_params());
    const double v = k.value_and_grad(lag, grad);
    CHECK(v == doctest::Approx(k(lag)).epsilon(1e-14));
    auto f = [&](const Eigen::VectorXd& vals) {
      return untransform(h, std::span<const double>(vals.data(), static_cast<std::size_t>(vals.size()))).kernel(lag);
    };
    for (std::size_t j = 0; j < k.num_params(); ++j) {
      const auto at = static_cast<Eigen::Index>(j);
      const double fd = oracle::central_difference(f, x.values, at, 1e-6 * std::max(1.0, std::abs(x.values[at])));
      CHECK(std::abs(grad[j] - fd) <= 1e-5 * std::max(std::abs(grad[j]), 1e-3));
    }
  }
}

TEST_CASE("skew lengthens covariance range for a moderate scale") {
  const double mu = 0.04 * 2.0 * std::numbers::pi;
  auto envelope = [&](double sigma, double gamma) {
    const SlsmComponent c{1.0, mu, sigma, gamma};
    double best = 0.0;
    for (double tau = 45.0; tau <= 55.0; tau += 1e-3) best = std::max(best, std::abs(slsm_component(tau, c)));
    return best;
  };
  CHECK(envelope(1.0, 0.45) > envelope(1.0, 0.0));
  // For a narrow spectral peak the skewed amplitude bound 1/sqrt(C^2 + gamma^2 tau^2)
  // sits below the unskewed 1/C, so the ordering flips.
  CHECK(envelope(0.1, 0.45) < envelope(0.1, 0.0));
}

TEST_CASE("Kernel validation") {
  CHECK_THROWS_AS((void)Kernel::from_slsm(KernelType::slsm, SlsmParams{{{-1.0, 0.3, 0.5, 0.0}}, 0.0}), DataError);
  CHECK_THROWS_AS((void)Kernel::from_slsm(KernelType::slsm, SlsmParams{{{1.0, 0.3, 0.0, 0.0}}, 0.0}), DataError);
  CHECK_THROWS_AS((void)Kernel::from_slsm(KernelType::slsm, SlsmParams{}), DataError);
  CHECK_THROWS_AS((void)Kernel::baseline({KernelType::rq, 1.0, -1.0, 1.0}), DataError);
  CHECK_THROWS_AS((void)kernel_type_from_string("matern"), UsageError);
  CHECK(kernel_type_from_string("lkp") == KernelType::lkp);
}
