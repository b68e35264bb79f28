// Command-line front end: fit, predict, evaluate, sample and spectrum.

#include <cmath>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slsm/csv.hpp"
#include "slsm/errors.hpp"
#include "slsm/job.hpp"
#include "slsm/model_io.hpp"
#include "slsm/rbcm.hpp"
#include "slsm/spectral_init.hpp"

namespace {

using namespace slsm;

enum Exit { ok = 0, usage = 2, data = 3, numerical = 4 };

struct TrainOptions {
  std::string kernel = "slsm";
  int q = 10;
  double train_frac = 0.6;
  bool prune = false;
  double prune_threshold = 1.0;
  int rounds = 2;
  bool weights_only = false;
  std::size_t rbcm = 0;
  std::uint64_t seed = 0;
  int max_iters = 100;
  int restarts = 1;
};

void add_train_options(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--kernel", o.kernel, "Kernel family")
      ->check(CLI::IsMember({"slsm", "sm", "lkp", "se", "rq"}))
      ->capture_default_str();
  cmd->add_option("--q", o.q, "Number of mixture components")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_flag("--prune", o.prune, "Prune small components and retrain");
  cmd->add_option("--prune-threshold", o.prune_threshold, "Weight threshold in target-variance units")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--rounds", o.rounds, "Pruning rounds")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_flag("--rewind-weights-only", o.weights_only, "Rewind only weights between pruning rounds");
  cmd->add_option("--rbcm", o.rbcm, "Train an rBCM ensemble with this many experts")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  cmd->add_option("--max-iters", o.max_iters, "L-BFGS iterations per training")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--restarts", o.restarts, "Optimizer restarts")->check(CLI::PositiveNumber)->capture_default_str();
}

OptConfig opt_config(const TrainOptions& o) {
  OptConfig c;
  c.max_iters = o.max_iters;
  c.restarts = o.restarts;
  c.seed = o.seed;
  return c;
}

PruneConfig prune_config(const TrainOptions& o) {
  PruneConfig p;
  p.threshold = o.prune_threshold;
  p.rounds = o.rounds;
  p.reset = o.weights_only ? ResetScope::weights_only : ResetScope::all;
  p.inner = opt_config(o);
  return p;
}

Eigen::MatrixXd parse_points(const std::string& list) {
  std::vector<double> v;
  std::stringstream ss(list);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError("--at: '" + cell + "' is not a number");
    }
  }
  if (v.empty()) throw UsageError("--at needs at least one point");
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// "start,stop,count" -> evenly spaced column.
Eigen::MatrixXd parse_grid(const std::string& spec) {
  const Eigen::MatrixXd parts = parse_points(spec);
  if (parts.rows() != 3 || parts(2, 0) < 1 || parts(2, 0) != std::floor(parts(2, 0))) {
    throw UsageError("--grid expects start,stop,count");
  }
  return Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(parts(2, 0)), parts(0, 0), parts(1, 0));
}

int cmd_fit(const std::string& data_path, const TrainOptions& o, double train_frac, const std::string& out) {
  Dataset data = read_dataset(data_path);
  if (train_frac < 1.0) data = chronological_split(data, train_frac).train;
  const KernelType type = kernel_type_from_string(o.kernel);
  if (o.prune && o.rbcm > 0) throw UsageError("--prune and --rbcm cannot be combined");
  const Normalization norm = Normalization::fit(data);
  const Initialization init = initialize(norm.apply(data), type, o.q, o.seed);
  std::cerr << "initialization: " << (init.spectral ? "spectral" : "random") << '\n';

  nlohmann::json j;
  if (o.rbcm > 0) {
    RbcmConfig rc;
    rc.experts = o.rbcm;
    rc.seed = o.seed;
    const RbcmFitResult r = rbcm_fit(data, init.params, opt_config(o), rc);
    j = to_json(r.ensemble);
    std::cerr << "experts: " << r.ensemble.size() << ", summed NLML (normalized): " << r.opt.f << '\n';
  } else if (o.prune) {
    if (!is_mixture(type)) throw UsageError("--prune needs a mixture kernel");
    const LthResult r = lth_fit(data, init.params, prune_config(o));
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    j = to_json(r.model, &r.report);
    std::cerr << "components: " << r.report.initial_q << " -> " << r.report.final_q() << ", NLML " << r.model.raw_nlml()
              << '\n';
  } else {
    const FitResult r = fit(data, init.params, opt_config(o));
    j = to_json(r.model);
    std::cerr << "NLML " << r.model.raw_nlml() << " after " << r.opt.trace.size() << " iterations\n";
  }
  const std::filesystem::path path = std::filesystem::path(out) / "model.json";
  write_json(path, j);
  std::cout << path.string() << '\n';
  return ok;
}

int cmd_predict(const std::string& model_path, const std::string& train_path, const std::string& at,
                const std::string& at_file, int horizon, bool observation, const std::string& out) {
  const SavedModel saved = saved_model_from_json(read_json(model_path));
  const Dataset train = read_dataset(train_path);
  Eigen::MatrixXd Xs;
  const int given = (at.empty() ? 0 : 1) + (at_file.empty() ? 0 : 1) + (horizon > 0 ? 1 : 0);
  if (given != 1) throw UsageError("give exactly one of --at, --at-file or --horizon");
  if (!at.empty()) {
    Xs = parse_points(at);
  } else if (!at_file.empty()) {
    Xs = read_inputs(at_file);
  } else {
    const Dataset used = train.head(saved.train_rows);
    if (used.dims() != 1 || !used.uniform) throw UsageError("--horizon needs uniformly sampled univariate data");
    Xs.resize(horizon, 1);
    const double last = used.X(used.X.rows() - 1, 0);
    for (int h = 0; h < horizon; ++h) Xs(h, 0) = last + used.delta_t * (h + 1);
  }
  const VarianceMode mode = observation ? VarianceMode::observation : VarianceMode::latent;
  const Prediction p = saved.ensemble ? rbcm_predict(restore_ensemble(saved, train), Xs, mode)
                                      : predict(restore_model(saved, train), Xs, mode);
  if (p.clamped > 0) std::cerr << "warning: " << p.clamped << " negative variances clamped to 0\n";
  if (out.empty() || out == "-") {
    write_predictions_csv(std::cout, Xs, p);
  } else {
    write_predictions_csv(out, Xs, p);
  }
  return ok;
}

int cmd_evaluate(const std::string& data_path, const TrainOptions& o, int runs, bool observation,
                 const std::string& out) {
  const Dataset data = read_dataset(data_path);
  ForecastJob job;
  job.train_frac = o.train_frac;
  job.kernel = kernel_type_from_string(o.kernel);
  job.q = o.q;
  job.seed = o.seed;
  job.prune = o.prune;
  job.prune_cfg = prune_config(o);
  job.rbcm_experts = o.rbcm;
  job.runs = runs;
  job.variance_mode = observation ? VarianceMode::observation : VarianceMode::latent;
  job.opt = opt_config(o);
  job.out = out;
  const JobReport report = run_job(job, data);
  std::cout << report.metrics_json(job).dump(2) << '\n';
  return ok;
}

int cmd_sample(const std::string& model_path, const std::string& kernel, const std::vector<std::string>& comps,
               double noise, const std::string& grid, int paths, std::uint64_t seed, const std::string& out) {
  Kernel k;
  if (!model_path.empty()) {
    const SavedModel saved = saved_model_from_json(read_json(model_path));
    if (saved.params.kernel.dims() != 1) throw UsageError("sampling supports univariate models only");
    k = denormalize(saved.params, saved.norm).kernel;
  } else {
    if (comps.empty()) throw UsageError("give --model or at least one --component w,mu,sigma,gamma");
    SlsmParams p;
    for (const auto& c : comps) {
      const Eigen::MatrixXd v = parse_points(c);
      if (v.rows() != 4) throw UsageError("--component expects w,mu,sigma,gamma");
      p.components.push_back({v(0, 0), v(1, 0), v(2, 0), v(3, 0)});
    }
    p.validate();
    k = Kernel::from_slsm(kernel_type_from_string(kernel), p);
  }
  const Eigen::MatrixXd X = parse_grid(grid);
  Eigen::MatrixXd S = sample_prior(k, X, paths, seed);
  if (noise > 0.0) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> z(0.0, std::sqrt(noise));
    for (Eigen::Index i = 0; i < S.size(); ++i) S.data()[i] += z(rng);
  }
  std::vector<std::string> header{"t"};
  std::vector<Eigen::VectorXd> cols{X.col(0)};
  for (int p = 0; p < paths; ++p) {
    header.push_back("path" + std::to_string(p + 1));
    cols.push_back(S.row(p).transpose());
  }
  write_csv(out, header, cols);
  std::cout << out << '\n';
  return ok;
}

int cmd_spectrum(const std::string& data_path, const TrainOptions& o, double train_frac, const std::string& model_path,
                 const std::string& out) {
  Dataset data = read_dataset(data_path);
  if (train_frac < 1.0) data = chronological_split(data, train_frac).train;
  const KernelType type = kernel_type_from_string(o.kernel);
  if (!is_mixture(type)) throw UsageError("spectrum overlays need a mixture kernel");
  const SpectrumEstimate spec = periodogram(data);
  const MixtureFit mix = em_mixture(spec, o.q, type == KernelType::sm ? MixtureKind::gaussian : MixtureKind::laplace, o.seed);
  const double area = spec.powers.sum() * spec.bin_width();
  Eigen::VectorXd em(spec.freqs.size());
  for (Eigen::Index i = 0; i < em.size(); ++i) em[i] = mix.density(spec.freqs[i]) * area;
  std::vector<std::string> header{"freq", "em_mixture"};
  std::vector<Eigen::VectorXd> cols{spec.freqs, em};
  if (!model_path.empty()) {
    const SavedModel saved = saved_model_from_json(read_json(model_path));
    const Hyperparameters h = denormalize(saved.params, saved.norm);
    if (!h.kernel.is_mixture() || h.kernel.dims() != 1) throw UsageError("--model must be a univariate mixture model");
    const SlsmParams p = h.kernel.to_slsm(h.noise_var);
    Eigen::VectorXd model(spec.freqs.size());
    for (Eigen::Index i = 0; i < model.size(); ++i) {
      double s = 0.0;
      for (const auto& c : p.components) s += c.weight * spectral_density(spec.freqs[i], h.kernel.type(), c);
      model[i] = 2.0 * s;
    }
    header.push_back("model");
    cols.push_back(model);
  }
  const std::filesystem::path dir(out);
  write_spectrum_csv(dir / "spectrum.csv", spec);
  write_csv(dir / "spectrum_fit.csv", header, cols);
  std::cout << (dir / "spectrum.csv").string() << '\n' << (dir / "spectrum_fit.csv").string() << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-process forecasting with skewed Laplace spectral mixture kernels"};
  app.require_subcommand(1);

  TrainOptions fit_opts;
  std::string fit_data;
  std::string fit_out = ".";
  double fit_frac = 1.0;
  auto* fit_cmd = app.add_subcommand("fit", "Train a model and write model.json");
  fit_cmd->add_option("--data", fit_data, "Training CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--train-frac", fit_frac, "Use only the first fraction of rows")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  fit_cmd->add_option("--out", fit_out, "Output directory")->capture_default_str();
  add_train_options(fit_cmd, fit_opts);

  std::string pred_model, pred_train, pred_at, pred_at_file, pred_out;
  int pred_horizon = 0;
  bool pred_obs = false;
  auto* pred_cmd = app.add_subcommand("predict", "Predict with a saved model");
  pred_cmd->add_option("--model", pred_model, "model.json from fit")->required()->check(CLI::ExistingFile);
  pred_cmd->add_option("--train", pred_train, "CSV the model was trained on")->required()->check(CLI::ExistingFile);
  pred_cmd->add_option("--at", pred_at, "Comma-separated univariate inputs");
  pred_cmd->add_option("--at-file", pred_at_file, "CSV of inputs, one row per point")->check(CLI::ExistingFile);
  pred_cmd->add_option("--horizon", pred_horizon, "Forecast this many steps past the training data");
  pred_cmd->add_flag("--observation-noise", pred_obs, "Include observation noise in the variance");
  pred_cmd->add_option("--out", pred_out, "Predictions CSV (default: stdout)");

  TrainOptions eval_opts;
  std::string eval_data;
  std::string eval_out;
  int eval_runs = 1;
  bool eval_obs = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "Chronological train/test evaluation with metrics");
  eval_cmd->alias("run");
  eval_cmd->add_option("--data", eval_data, "Input CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--train-frac", eval_opts.train_frac, "Training fraction of rows")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  eval_cmd->add_option("--runs", eval_runs, "Independent seeded runs")->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_flag("--observation-noise", eval_obs, "Report observation rather than latent variance");
  eval_cmd->add_option("--out", eval_out, "Artifact directory");
  add_train_options(eval_cmd, eval_opts);

  std::string sample_model, sample_kernel = "slsm", sample_grid = "0,50,501", sample_out = "samples.csv";
  std::vector<std::string> sample_comps;
  int sample_paths = 3;
  double sample_noise = 0.0;
  std::uint64_t sample_seed = 0;
  auto* sample_cmd = app.add_subcommand("sample", "Draw prior sample paths");
  sample_cmd->add_option("--model", sample_model, "Use the kernel of a saved model")->check(CLI::ExistingFile);
  sample_cmd->add_option("--kernel", sample_kernel, "Kernel for --component")
      ->check(CLI::IsMember({"slsm", "sm", "lkp"}))
      ->capture_default_str();
  sample_cmd->add_option("--component", sample_comps, "w,mu,sigma,gamma (repeatable)");
  sample_cmd->add_option("--noise", sample_noise, "Add observation noise with this variance")->capture_default_str();
  sample_cmd->add_option("--grid", sample_grid, "start,stop,count")->capture_default_str();
  sample_cmd->add_option("--paths", sample_paths, "Number of paths")->check(CLI::PositiveNumber)->capture_default_str();
  sample_cmd->add_option("--seed", sample_seed, "Random seed")->capture_default_str();
  sample_cmd->add_option("--out", sample_out, "Output CSV")->capture_default_str();

  TrainOptions spec_opts;
  std::string spec_data, spec_model, spec_out = ".";
  double spec_frac = 1.0;
  auto* spec_cmd = app.add_subcommand("spectrum", "Periodogram with fitted mixture overlays");
  spec_cmd->add_option("--data", spec_data, "Uniformly sampled univariate CSV")->required()->check(CLI::ExistingFile);
  spec_cmd->add_option("--train-frac", spec_frac, "Use only the first fraction of rows")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  spec_cmd->add_option("--kernel", spec_opts.kernel, "Mixture family of the overlay")
      ->check(CLI::IsMember({"slsm", "sm", "lkp"}))
      ->capture_default_str();
  spec_cmd->add_option("--q", spec_opts.q, "Mixture components")->check(CLI::PositiveNumber)->capture_default_str();
  spec_cmd->add_option("--seed", spec_opts.seed, "Random seed")->capture_default_str();
  spec_cmd->add_option("--model", spec_model, "Also overlay the spectral density of a saved model")
      ->check(CLI::ExistingFile);
  spec_cmd->add_option("--out", spec_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_data, fit_opts, fit_frac, fit_out);
    if (*pred_cmd) return cmd_predict(pred_model, pred_train, pred_at, pred_at_file, pred_horizon, pred_obs, pred_out);
    if (*eval_cmd) return cmd_evaluate(eval_data, eval_opts, eval_runs, eval_obs, eval_out);
    if (*sample_cmd) {
      return cmd_sample(sample_model, sample_kernel, sample_comps, sample_noise, sample_grid, sample_paths, sample_seed,
                        sample_out);
    }
    if (*spec_cmd) return cmd_spectrum(spec_data, spec_opts, spec_frac, spec_model, spec_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return usage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return numerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return data;
  }
  return usage;
}
