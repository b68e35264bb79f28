#include "slsm/job.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>

#include "slsm/errors.hpp"
#include "slsm/metrics.hpp"
#include "slsm/model_io.hpp"
#include "slsm/rbcm.hpp"
#include "slsm/spectral_init.hpp"

namespace slsm {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

[[noreturn]] void rethrow_with_context(const std::string& ctx) {
  try {
    throw;
  } catch (const UsageError& e) {
    throw UsageError(ctx + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(ctx + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(ctx + ": " + e.what());
  }
}

std::filesystem::path artifact(const ForecastJob& job, const std::string& stem, const std::string& ext, int run) {
  return job.out / (stem + (job.runs > 1 ? "_run" + std::to_string(run) : "") + ext);
}

void write_spectrum_files(const ForecastJob& job, int run, const Dataset& train, const Initialization& init,
                          const Hyperparameters& reported) {
  const SpectrumEstimate raw = periodogram(train);
  write_spectrum_csv(artifact(job, "spectrum", ".csv", run), raw);
  // Both overlays are scaled to the area of the raw periodogram.
  const double area = raw.powers.sum() * raw.bin_width();
  Eigen::VectorXd em(raw.freqs.size());
  Eigen::VectorXd model(raw.freqs.size());
  const SlsmParams p = reported.kernel.to_slsm(reported.noise_var);
  for (Eigen::Index i = 0; i < raw.freqs.size(); ++i) {
    em[i] = init.mixture->density(raw.freqs[i]) * area;
    double s = 0.0;
    for (const auto& c : p.components) s += c.weight * spectral_density(raw.freqs[i], reported.kernel.type(), c);
    model[i] = 2.0 * s;
  }
  write_csv(artifact(job, "spectrum_fit", ".csv", run), {"freq", "em_mixture", "model"}, {raw.freqs, em, model});
}

RunOutcome run_once(const ForecastJob& job, const Split& split, int run) {
  const auto start = Clock::now();
  RunOutcome out;
  out.run = run;
  out.seed = job.seed + static_cast<std::uint64_t>(run);

  const Normalization norm = Normalization::fit(split.train);
  const Initialization init = initialize(norm.apply(split.train), job.kernel, job.q, out.seed);
  out.spectral = init.spectral;
  out.initial_q = init.params.kernel.is_mixture() ? init.params.kernel.num_components() : 0;
  OptConfig opt = job.opt;
  opt.seed = out.seed;

  Prediction pred;
  Hyperparameters reported;
  nlohmann::json model_json;
  if (job.rbcm_experts > 0) {
    RbcmConfig rc;
    rc.experts = job.rbcm_experts;
    rc.seed = out.seed;
    const RbcmFitResult r = rbcm_fit(split.train, init.params, opt, rc);
    pred = rbcm_predict(r.ensemble, split.test.X, job.variance_mode);
    out.nlml = r.opt.f + static_cast<double>(split.train.size()) * std::log(norm.y_std);
    out.final_q = out.initial_q;
    model_json = to_json(r.ensemble);
    reported = denormalize(r.ensemble.params, norm);
  } else {
    TrainedModel model;
    std::optional<PruneReport> report;
    if (job.prune) {
      PruneConfig pc = job.prune_cfg;
      pc.inner = opt;
      LthResult r = lth_fit(split.train, init.params, pc);
      model = std::move(r.model);
      report = std::move(r.report);
    } else {
      model = fit(split.train, init.params, opt).model;
    }
    pred = predict(model, split.test.X, job.variance_mode);
    out.nlml = model.raw_nlml();
    out.final_q = model.params.kernel.is_mixture() ? model.params.kernel.num_components() : 0;
    model_json = to_json(model, report ? &*report : nullptr);
    reported = model.reported_params();
  }

  out.mse = mse(split.test.y, pred.mean);
  out.mae = mae(split.test.y, pred.mean);
  out.smse = smse(split.test.y, pred.mean);

  if (!job.out.empty()) {
    write_json(artifact(job, "model", ".json", run), model_json);
    write_predictions_csv(artifact(job, "predictions", ".csv", run), split.test.X, pred);
    if (init.spectral) write_spectrum_files(job, run, split.train, init, reported);
  }
  out.runtime_ms = elapsed_ms(start);
  return out;
}

nlohmann::json summary(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {{"mean", mean}, {"std", sd}, {"values", v}};
}

}  // namespace

void ForecastJob::validate() const {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw UsageError("train fraction must lie in (0, 1)");
  if (q < 1) throw UsageError("Q must be >= 1");
  if (runs < 1) throw UsageError("runs must be >= 1");
  if (prune && rbcm_experts > 0) throw UsageError("pruning and rBCM cannot be combined");
  if (prune && !is_mixture(kernel)) throw UsageError("pruning needs a mixture kernel (slsm, sm or lkp)");
  if (prune) prune_cfg.validate();
  opt.validate();
}

Split chronological_split(const Dataset& data, double train_frac) {
  data.validate();
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw UsageError("train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (data.dims() == 1) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return data.X(static_cast<Eigen::Index>(a), 0) < data.X(static_cast<Eigen::Index>(b), 0);
    });
  }
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(data.size())));
  if (n_train < 2 || data.size() - n_train < 2) {
    throw DataError("split of " + std::to_string(data.size()) + " rows leaves fewer than 2 training or test points");
  }
  Split s;
  s.train = data.subset({order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train)});
  s.test = data.subset({order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end()});
  return s;
}

JobReport run_job(const ForecastJob& job, const Dataset& data) {
  job.validate();
  const auto start = Clock::now();
  Split split;
  try {
    split = chronological_split(data, job.train_frac);
  } catch (const Error&) {
    rethrow_with_context("split");
  }
  std::vector<std::future<RunOutcome>> futures;
  for (int r = 0; r < job.runs; ++r) {
    futures.push_back(std::async(std::launch::async, [&job, &split, r] {
      try {
        return run_once(job, split, r);
      } catch (const Error&) {
        rethrow_with_context("run " + std::to_string(r));
      }
    }));
  }
  JobReport report;
  report.n_train = split.train.size();
  report.n_test = split.test.size();
  for (auto& f : futures) report.runs.push_back(f.get());
  report.runtime_ms = elapsed_ms(start);
  if (!job.out.empty()) write_json(job.out / "metrics.json", report.metrics_json(job));
  return report;
}

nlohmann::json JobReport::metrics_json(const ForecastJob& job) const {
  std::vector<double> mse_v, mae_v, smse_v, nlml_v, pruned_v, final_v;
  bool spectral = !runs.empty();
  for (const auto& r : runs) {
    mse_v.push_back(r.mse);
    mae_v.push_back(r.mae);
    smse_v.push_back(r.smse);
    nlml_v.push_back(r.nlml);
    pruned_v.push_back(static_cast<double>(r.initial_q - r.final_q));
    final_v.push_back(static_cast<double>(r.final_q));
    spectral = spectral && r.spectral;
  }
  return {{"kernel", std::string(to_string(job.kernel))},
          {"q", job.q},
          {"seed", job.seed},
          {"runs", runs.size()},
          {"train_frac", job.train_frac},
          {"n_train", n_train},
          {"n_test", n_test},
          {"variance_mode", job.variance_mode == VarianceMode::latent ? "latent" : "observation"},
          {"spectral_init", spectral},
          {"mse", summary(mse_v)},
          {"mae", summary(mae_v)},
          {"smse", summary(smse_v)},
          {"nlml", summary(nlml_v)},
          {"pruned_q", summary(pruned_v)},
          {"final_q", summary(final_v)},
          {"runtime_ms", runtime_ms}};
}

}  // namespace slsm
