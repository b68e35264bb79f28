#include "slsm/spectral_init.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "rng.hpp"
#include "slsm/errors.hpp"
#include "slsm/transform.hpp"

namespace slsm {

namespace {

constexpr double kDegenerateScale = 1e-8;
constexpr double kDegenerateWeight = 1e-10;

double log_density(MixtureKind kind, double s, const MixtureComponentFit& c) {
  if (kind == MixtureKind::gaussian) {
    const double z = (s - c.location) / c.scale;
    return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(c.scale) - 0.5 * z * z;
  }
  const double b = c.scale / std::numbers::sqrt2;
  return -std::log(2.0 * b) - std::abs(s - c.location) / b;
}

double weighted_median(const Eigen::VectorXd& s, const Eigen::VectorXd& v) {
  // s is sorted ascending.
  const double half = 0.5 * v.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    acc += v[i];
    if (acc >= half) return s[i];
  }
  return s[s.size() - 1];
}

double population_variance(const Eigen::VectorXd& y) {
  const double m = y.mean();
  return (y.array() - m).square().mean();
}

struct EmRun {
  std::vector<MixtureComponentFit> comps;
  std::vector<double> trace;
  int reseeded = 0;
  int dropped = 0;
};

// Draws up to Q distinct bins with probability proportional to their weight.
std::vector<Eigen::Index> sample_bins(const Eigen::VectorXd& p, int Q, std::mt19937_64& rng) {
  std::vector<double> w(p.data(), p.data() + p.size());
  std::vector<Eigen::Index> out;
  for (int q = 0; q < Q; ++q) {
    if (std::none_of(w.begin(), w.end(), [](double x) { return x > 0.0; })) break;
    std::discrete_distribution<Eigen::Index> pick(w.begin(), w.end());
    const Eigen::Index i = pick(rng);
    out.push_back(i);
    w[static_cast<std::size_t>(i)] = 0.0;
  }
  return out;
}

EmRun run_em(const SpectrumEstimate& spec, const Eigen::VectorXd& p, int Q, MixtureKind kind, std::mt19937_64& rng,
             const EmConfig& cfg) {
  const Eigen::VectorXd& s = spec.freqs;
  const Eigen::Index n = s.size();
  const double floor = 0.5 * spec.bin_width();
  const double mean = p.dot(s);
  const double spread = std::sqrt(std::max(0.0, p.dot((s.array() - mean).square().matrix())));

  EmRun run;
  const auto bins = sample_bins(p, Q, rng);
  const double init_scale = std::max(floor, spread / static_cast<double>(bins.size()));
  for (auto b : bins) run.comps.push_back({1.0 / static_cast<double>(bins.size()), s[b], init_scale});
  std::vector<bool> was_reseeded(run.comps.size(), false);

  Eigen::MatrixXd resp(n, static_cast<Eigen::Index>(run.comps.size()));
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const auto K = static_cast<Eigen::Index>(run.comps.size());
    resp.resize(n, K);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double hi = -std::numeric_limits<double>::infinity();
      for (Eigen::Index q = 0; q < K; ++q) {
        const auto& c = run.comps[static_cast<std::size_t>(q)];
        resp(i, q) = std::log(c.weight) + log_density(kind, s[i], c);
        hi = std::max(hi, resp(i, q));
      }
      double sum = 0.0;
      for (Eigen::Index q = 0; q < K; ++q) sum += std::exp(resp(i, q) - hi);
      const double lse = hi + std::log(sum);
      for (Eigen::Index q = 0; q < K; ++q) resp(i, q) = std::exp(resp(i, q) - lse);
      ll += p[i] * lse;
    }
    const bool converged = !run.trace.empty() && std::abs(ll - run.trace.back()) < cfg.tol;
    run.trace.push_back(ll);
    if (converged || iter + 1 == cfg.max_iters) break;

    bool restructured = false;
    for (Eigen::Index q = 0; q < K; ++q) {
      auto& c = run.comps[static_cast<std::size_t>(q)];
      const Eigen::VectorXd v = p.cwiseProduct(resp.col(q));
      const double W = v.sum();
      c.weight = W;
      if (!(W > 0.0)) {
        c.scale = 0.0;
        continue;
      }
      if (kind == MixtureKind::gaussian) {
        c.location = v.dot(s) / W;
        c.scale = std::max(floor, std::sqrt(v.dot((s.array() - c.location).square().matrix()) / W));
      } else {
        c.location = weighted_median(s, v);
        const double b = v.dot((s.array() - c.location).abs().matrix()) / W;
        c.scale = std::max(floor, std::numbers::sqrt2 * b);
      }
    }
    for (std::size_t q = 0; q < run.comps.size();) {
      auto& c = run.comps[q];
      if (c.weight >= kDegenerateWeight && c.scale >= kDegenerateScale) {
        ++q;
        continue;
      }
      restructured = true;
      if (!was_reseeded[q]) {
        const auto b = sample_bins(p, 1, rng);
        c = {1.0 / static_cast<double>(run.comps.size()), s[b.front()], init_scale};
        was_reseeded[q] = true;
        ++run.reseeded;
        ++q;
      } else {
        run.comps.erase(run.comps.begin() + static_cast<std::ptrdiff_t>(q));
        was_reseeded.erase(was_reseeded.begin() + static_cast<std::ptrdiff_t>(q));
        ++run.dropped;
      }
    }
    if (restructured) {
      double total = 0.0;
      for (const auto& c : run.comps) total += c.weight;
      for (auto& c : run.comps) c.weight /= total;
      // The likelihood is not comparable across a reseed.
      run.trace.clear();
    }
  }
  return run;
}

}  // namespace

// Bins sit at k * 2 pi / (n dt), so the first one is also the spacing.
double SpectrumEstimate::bin_width() const { return freqs.size() == 0 ? 0.0 : freqs[0]; }

void SpectrumEstimate::validate() const {
  if (freqs.size() == 0 || freqs.size() != powers.size()) throw DataError("spectrum must have equal, non-zero lengths");
  for (Eigen::Index i = 1; i < freqs.size(); ++i) {
    if (!(freqs[i] > freqs[i - 1])) throw DataError("spectrum frequencies must be strictly increasing");
  }
  if (!(powers.array() >= 0.0).all() || !powers.allFinite()) throw DataError("spectrum powers must be finite and >= 0");
}

SpectrumEstimate periodogram(const Eigen::VectorXd& y, double delta_t) {
  const auto n = y.size();
  if (n < 4) throw DataError("periodogram needs at least 4 samples, got " + std::to_string(n));
  if (!(delta_t > 0.0) || !std::isfinite(delta_t)) throw DataError("sampling interval must be positive");
  if (!y.allFinite()) throw DataError("periodogram: non-finite sample");

  std::vector<double> centered(static_cast<std::size_t>(n));
  const double m = y.mean();
  for (Eigen::Index i = 0; i < n; ++i) centered[static_cast<std::size_t>(i)] = y[i] - m;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> Y;
  fft.fwd(Y, centered);

  const auto bins = n / 2;
  SpectrumEstimate out;
  out.delta_t = delta_t;
  out.freqs.resize(bins);
  out.powers.resize(bins);
  const double dn = static_cast<double>(n);
  const double scale = delta_t / (std::numbers::pi * dn);
  for (Eigen::Index k = 1; k <= bins; ++k) {
    out.freqs[k - 1] = 2.0 * std::numbers::pi * static_cast<double>(k) / (dn * delta_t);
    out.powers[k - 1] = std::norm(Y[static_cast<std::size_t>(k)]) * scale;
  }
  return out;
}

SpectrumEstimate periodogram(const Dataset& data) {
  data.validate();
  if (data.dims() != 1) throw DataError("periodogram needs univariate inputs; use random initialization instead");
  if (!data.uniform) {
    throw DataError("periodogram needs uniformly sampled inputs (gap ratio above 1e-6); use random initialization instead");
  }
  return periodogram(data.y, data.delta_t);
}

double MixtureFit::density(double s) const {
  double sum = 0.0;
  for (const auto& c : components) sum += c.weight * std::exp(log_density(kind, s, c));
  return sum;
}

MixtureFit em_mixture(const SpectrumEstimate& spec, int Q, MixtureKind kind, std::uint64_t seed, const EmConfig& cfg) {
  if (Q < 1) throw UsageError("mixture needs Q >= 1");
  if (cfg.max_iters < 1 || cfg.restarts < 1) throw UsageError("EM needs max_iters >= 1 and restarts >= 1");
  spec.validate();
  const double total = spec.powers.sum();
  if (!(total > 0.0)) throw DataError("spectrum has no power to fit (constant series?)");
  const Eigen::VectorXd p = spec.powers / total;

  MixtureFit best;
  best.kind = kind;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    auto rng = detail::make_rng(seed, static_cast<std::uint64_t>(r));
    EmRun run = run_em(spec, p, Q, kind, rng, cfg);
    const double ll = run.trace.back();
    if (ll > best_ll) {
      best_ll = ll;
      best.components = std::move(run.comps);
      best.loglik_trace = std::move(run.trace);
      best.restart_index = r;
      best.reseeded = run.reseeded;
      best.dropped = run.dropped;
    }
  }
  return best;
}

Hyperparameters init_params(const MixtureFit& fit, KernelType type, double y_var, std::uint64_t seed) {
  if (!is_mixture(type)) throw UsageError("spectral initialization needs a mixture kernel");
  if (fit.components.empty()) throw DataError("mixture fit has no components");
  auto rng = detail::make_rng(seed, 0x736b6577);
  std::uniform_real_distribution<double> skew(-1.0, 1.0);
  std::vector<MixtureComponent> comps;
  for (const auto& c : fit.components) {
    const double g = skew(rng);
    comps.push_back({c.weight * y_var, Eigen::VectorXd::Constant(1, std::max(c.location, kMinFrequency)),
                     Eigen::VectorXd::Constant(1, c.scale),
                     Eigen::VectorXd::Constant(1, type == KernelType::slsm ? g : 0.0)});
  }
  return {Kernel::mixture(type, std::move(comps)), 0.1 * y_var};
}

namespace {

constexpr Eigen::Index kMaxSpacingRows = 400;

std::vector<Eigen::Index> spacing_rows(Eigen::Index n) {
  std::vector<Eigen::Index> rows;
  const Eigen::Index m = std::min(n, kMaxSpacingRows);
  for (Eigen::Index i = 0; i < m; ++i) rows.push_back(m == n ? i : i * (n - 1) / (m - 1));
  return rows;
}

double median(std::vector<double> v, double fallback) {
  if (v.empty()) return fallback;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// Characteristic input spacing per dimension: the median gap between sorted
// values for univariate inputs, the median nonzero pairwise distance otherwise.
Eigen::VectorXd input_spacing(const Eigen::MatrixXd& X) {
  Eigen::VectorXd d(X.cols());
  const auto rows = spacing_rows(X.rows());
  for (Eigen::Index p = 0; p < X.cols(); ++p) {
    std::vector<double> gaps;
    if (X.cols() == 1) {
      std::vector<double> t(X.col(0).data(), X.col(0).data() + X.rows());
      std::sort(t.begin(), t.end());
      for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i] > t[i - 1]) gaps.push_back(t[i] - t[i - 1]);
      }
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          const double g = std::abs(X(rows[i], p) - X(rows[j], p));
          if (g > 0.0) gaps.push_back(g);
        }
      }
    }
    d[p] = median(std::move(gaps), 1.0);
  }
  return d;
}

double median_distance(const Eigen::MatrixXd& X) {
  const auto rows = spacing_rows(X.rows());
  std::vector<double> dist;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double g = (X.row(rows[i]) - X.row(rows[j])).norm();
      if (g > 0.0) dist.push_back(g);
    }
  }
  return median(std::move(dist), 1.0);
}

}  // namespace

Hyperparameters random_init(const Eigen::MatrixXd& X, KernelType type, int Q, double y_var, std::uint64_t seed) {
  if (X.rows() < 1 || X.cols() < 1) throw DataError("random initialization needs at least one input");
  if (!(y_var > 0.0)) y_var = 1.0;
  if (!is_mixture(type)) {
    return {Kernel::baseline({type, y_var, median_distance(X), 1.0}, static_cast<std::size_t>(X.cols())), 0.1 * y_var};
  }
  if (Q < 1) throw UsageError("mixture needs Q >= 1");
  const Eigen::VectorXd range = std::numbers::pi * input_spacing(X).cwiseInverse();
  auto rng = detail::make_rng(seed, 0x72616e64);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<MixtureComponent> comps;
  const auto P = X.cols();
  for (int q = 0; q < Q; ++q) {
    MixtureComponent c{y_var / Q, Eigen::VectorXd(P), Eigen::VectorXd(P), Eigen::VectorXd::Zero(P)};
    for (Eigen::Index p = 0; p < P; ++p) {
      c.freq[p] = std::max(kMinFrequency, unit(rng) * range[p]);
      c.scale[p] = (0.1 + 0.9 * unit(rng)) * range[p];
      const double g = 2.0 * unit(rng) - 1.0;
      if (type == KernelType::slsm) c.skew[p] = g;
    }
    comps.push_back(std::move(c));
  }
  return {Kernel::mixture(type, std::move(comps)), 0.1 * y_var};
}

Initialization initialize(const Dataset& data, KernelType type, int Q, std::uint64_t seed) {
  data.validate();
  const double y_var = population_variance(data.y);
  Initialization out;
  if (is_mixture(type) && data.dims() == 1 && data.uniform && data.size() >= 4 && y_var > 0.0) {
    out.spectrum = periodogram(data);
    out.mixture = em_mixture(*out.spectrum, Q, type == KernelType::sm ? MixtureKind::gaussian : MixtureKind::laplace, seed);
    out.params = init_params(*out.mixture, type, y_var, seed);
    out.spectral = true;
    return out;
  }
  out.params = random_init(data.X, type, Q, y_var, seed);
  return out;
}

}  // namespace slsm
