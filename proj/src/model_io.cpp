#include "slsm/model_io.hpp"

#include <fstream>

#include "slsm/errors.hpp"

namespace slsm {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) {
  if (v.size() == 1) return v[0];
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd to_vec(const json& j, std::size_t dims, const char* field) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dims));
  if (j.is_number()) {
    if (dims != 1) throw DimensionError(dims, 1, field);
    v[0] = j.get<double>();
    return v;
  }
  const auto values = j.get<std::vector<double>>();
  if (values.size() != dims) throw DimensionError(dims, values.size(), field);
  for (std::size_t i = 0; i < dims; ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

json kernel_json(const Hyperparameters& h, double y_var, json& out) {
  const Kernel& k = h.kernel;
  out["kernel_type"] = std::string(to_string(k.type()));
  out["input_dim"] = k.dims();
  out["units"] = "normalized";
  out["noise_var"] = h.noise_var;
  json reported;
  reported["noise_var"] = h.noise_var * y_var;
  if (k.is_mixture()) {
    json comps = json::array();
    json weights = json::array();
    for (const auto& c : k.components()) {
      comps.push_back({{"w", c.weight}, {"mu", vec(c.freq)}, {"sigma", vec(c.scale)}, {"gamma", vec(c.skew)}});
      weights.push_back(c.weight * y_var);
    }
    out["components"] = comps;
    reported["weights"] = weights;
  } else {
    const auto& b = k.baseline_params();
    out["baseline"] = {{"amplitude", b.amplitude}, {"lengthscale", b.lengthscale}, {"alpha", b.rq_alpha}};
    reported["amplitude"] = b.amplitude * y_var;
  }
  return reported;
}

json norm_json(const Normalization& n) {
  return {{"y_mean", n.y_mean},
          {"y_std", n.y_std},
          {"x_means", std::vector<double>(n.x_means.data(), n.x_means.data() + n.x_means.size())},
          {"x_stds", std::vector<double>(n.x_stds.data(), n.x_stds.data() + n.x_stds.size())}};
}

json prune_json(const PruneReport& r) {
  json rounds = json::array();
  for (const auto& round : r.rounds) {
    json pruned = json::array();
    for (std::size_t i = 0; i < round.pruned.size(); ++i) {
      pruned.push_back({{"index", round.pruned[i]}, {"weight", round.pruned_weights[i]}});
    }
    rounds.push_back({{"round", round.round},
                      {"pruned", pruned},
                      {"survivors", round.survivors},
                      {"surviving_q", round.survivors.size()},
                      {"nlml_before", round.nlml_before},
                      {"nlml_after", round.nlml_after},
                      {"kept_largest", round.kept_largest}});
  }
  return {{"threshold", r.threshold}, {"initial_q", r.initial_q}, {"final_q", r.final_q()}, {"rounds", rounds}};
}

PruneReport prune_from_json(const json& j) {
  PruneReport r;
  r.threshold = j.at("threshold").get<double>();
  r.initial_q = j.at("initial_q").get<std::size_t>();
  for (const auto& jr : j.at("rounds")) {
    PruneRound round;
    round.round = jr.at("round").get<int>();
    for (const auto& p : jr.at("pruned")) {
      round.pruned.push_back(p.at("index").get<std::size_t>());
      round.pruned_weights.push_back(p.at("weight").get<double>());
    }
    round.survivors = jr.at("survivors").get<std::vector<std::size_t>>();
    round.nlml_before = jr.at("nlml_before").get<double>();
    round.nlml_after = jr.at("nlml_after").get<double>();
    round.kept_largest = jr.at("kept_largest").get<bool>();
    r.rounds.push_back(std::move(round));
  }
  return r;
}

json header(const Hyperparameters& h, const Normalization& norm, const char* kind) {
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["kind"] = kind;
  j["reported"] = kernel_json(h, norm.y_var(), j);
  j["normalization"] = norm_json(norm);
  return j;
}

Dataset training_rows(const SavedModel& saved, const Dataset& data) {
  if (data.size() < saved.train_rows) {
    throw DataError("training data has " + std::to_string(data.size()) + " rows but the model was fit on " +
                    std::to_string(saved.train_rows));
  }
  Dataset train = data.size() == saved.train_rows ? data : data.head(saved.train_rows);
  if (fingerprint(train) != saved.train_fingerprint) {
    throw DataError("training data does not match the model (fingerprint " + fingerprint(train) + ", expected " +
                    saved.train_fingerprint + ")");
  }
  return train;
}

}  // namespace

json to_json(const TrainedModel& model, const PruneReport* report) {
  json j = header(model.params, model.norm, "model");
  j["jitter_used"] = model.jitter_used;
  j["train_fingerprint"] = model.train_fingerprint;
  j["train_rows"] = model.y.size();
  j["nlml"] = model.raw_nlml();
  if (report != nullptr) j["prune_report"] = prune_json(*report);
  return j;
}

json to_json(const ExpertEnsemble& ens) {
  json j = header(ens.params, ens.norm, "ensemble");
  j["train_fingerprint"] = ens.train_fingerprint;
  std::size_t rows = 0;
  json experts = json::array();
  for (std::size_t i = 0; i < ens.experts.size(); ++i) {
    for (auto idx : ens.subsets[i]) rows = std::max(rows, idx + 1);
    experts.push_back({{"indices", ens.subsets[i]},
                       {"jitter_used", ens.experts[i].jitter_used},
                       {"factor_fingerprint", fingerprint(ens.experts[i].chol_L)}});
  }
  j["train_rows"] = rows;
  j["beta_mode"] = ens.beta_mode == BetaMode::entropy ? "entropy" : "uniform";
  j["shared_full_data"] = ens.shared_full_data;
  j["experts"] = experts;
  return j;
}

SavedModel saved_model_from_json(const json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw DataError("unsupported model schema_version " + std::to_string(version));
    }
    SavedModel s;
    const KernelType type = kernel_type_from_string(j.at("kernel_type").get<std::string>());
    const auto dims = j.at("input_dim").get<std::size_t>();
    s.params.noise_var = j.at("noise_var").get<double>();
    if (is_mixture(type)) {
      std::vector<MixtureComponent> comps;
      for (const auto& c : j.at("components")) {
        comps.push_back({c.at("w").get<double>(), to_vec(c.at("mu"), dims, "mu"), to_vec(c.at("sigma"), dims, "sigma"),
                         to_vec(c.at("gamma"), dims, "gamma")});
      }
      s.params.kernel = Kernel::mixture(type, std::move(comps));
    } else {
      const auto& b = j.at("baseline");
      s.params.kernel = Kernel::baseline(
          {type, b.at("amplitude").get<double>(), b.at("lengthscale").get<double>(), b.at("alpha").get<double>()}, dims);
    }
    const auto& n = j.at("normalization");
    s.norm.y_mean = n.at("y_mean").get<double>();
    s.norm.y_std = n.at("y_std").get<double>();
    const auto xm = n.at("x_means").get<std::vector<double>>();
    const auto xs = n.at("x_stds").get<std::vector<double>>();
    s.norm.x_means = Eigen::Map<const Eigen::VectorXd>(xm.data(), static_cast<Eigen::Index>(xm.size()));
    s.norm.x_stds = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    s.train_fingerprint = j.at("train_fingerprint").get<std::string>();
    s.train_rows = j.at("train_rows").get<std::size_t>();
    if (j.contains("prune_report")) s.prune_report = prune_from_json(j.at("prune_report"));
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ensemble") {
      s.ensemble = true;
      s.beta_mode = j.at("beta_mode").get<std::string>() == "uniform" ? BetaMode::uniform : BetaMode::entropy;
      s.shared_full_data = j.at("shared_full_data").get<bool>();
      for (const auto& e : j.at("experts")) {
        s.experts.push_back({e.at("indices").get<std::vector<std::size_t>>(), e.at("jitter_used").get<double>(),
                             e.at("factor_fingerprint").get<std::string>()});
      }
    } else if (kind == "model") {
      s.jitter_used = j.at("jitter_used").get<double>();
    } else {
      throw DataError("unknown model kind '" + kind + "'");
    }
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

TrainedModel restore_model(const SavedModel& saved, const Dataset& data) {
  if (saved.ensemble) throw UsageError("this model file holds an expert ensemble");
  TrainedModel m = condition(training_rows(saved, data), saved.params, saved.norm);
  if (m.jitter_used != saved.jitter_used) {
    throw NumericalError("rebuilt factorization used jitter " + std::to_string(m.jitter_used) + ", model recorded " +
                         std::to_string(saved.jitter_used));
  }
  return m;
}

ExpertEnsemble restore_ensemble(const SavedModel& saved, const Dataset& data) {
  if (!saved.ensemble) throw UsageError("this model file holds a single model");
  const Dataset train = training_rows(saved, data);
  std::vector<std::vector<std::size_t>> subsets;
  for (const auto& e : saved.experts) {
    for (auto i : e.indices) {
      if (i >= train.size()) throw DataError("expert index " + std::to_string(i) + " is out of range");
    }
    subsets.push_back(e.indices);
  }
  ExpertEnsemble ens = make_ensemble(train, saved.params, saved.norm, std::move(subsets), saved.beta_mode);
  ens.shared_full_data = saved.shared_full_data;
  for (std::size_t i = 0; i < ens.experts.size(); ++i) {
    if (fingerprint(ens.experts[i].chol_L) != saved.experts[i].factor_fingerprint) {
      throw NumericalError("rebuilt factor of expert " + std::to_string(i) + " does not match the model file");
    }
  }
  return ens;
}

}  // namespace slsm
