#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slsm/gp.hpp"
#include "slsm/pruning.hpp"
#include "slsm/rbcm.hpp"

namespace slsm {

inline constexpr int kModelSchemaVersion = 1;

struct ExpertRecord {
  std::vector<std::size_t> indices;
  double jitter_used = 0.0;
  std::string factor_fingerprint;
};

// Everything a model file holds. Hyperparameters are stored in normalized
// units so a reload is bit-exact; the factors are rebuilt from the training
// data, which is checked against the stored fingerprint.
struct SavedModel {
  Hyperparameters params;
  Normalization norm;
  double jitter_used = 0.0;
  std::string train_fingerprint;
  std::size_t train_rows = 0;
  std::optional<PruneReport> prune_report;

  bool ensemble = false;
  BetaMode beta_mode = BetaMode::entropy;
  bool shared_full_data = false;
  std::vector<ExpertRecord> experts;
};

[[nodiscard]] nlohmann::json to_json(const TrainedModel& model, const PruneReport* report = nullptr);
[[nodiscard]] nlohmann::json to_json(const ExpertEnsemble& ens);
[[nodiscard]] SavedModel saved_model_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);

// `data` may be the full file the model was trained from; only its first
// train_rows rows are used.
[[nodiscard]] TrainedModel restore_model(const SavedModel& saved, const Dataset& data);
[[nodiscard]] ExpertEnsemble restore_ensemble(const SavedModel& saved, const Dataset& data);

}  // namespace slsm
