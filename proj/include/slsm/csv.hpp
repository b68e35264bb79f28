#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "slsm/dataset.hpp"
#include "slsm/gp.hpp"
#include "slsm/spectral_init.hpp"

namespace slsm {

// A parsed comma-separated table. The header is detected automatically: the
// first row is treated as column names when any of its cells is not a number.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
};

[[nodiscard]] Table parse_table(std::string_view text, const std::string& source = "<input>");
[[nodiscard]] Table read_table(const std::filesystem::path& path);

// One column: targets at t = 0, 1, ...; two columns: (t, y); more: (x1..xP, y).
[[nodiscard]] Dataset parse_dataset(std::string_view text, const std::string& source = "<input>");
[[nodiscard]] Dataset read_dataset(const std::filesystem::path& path);

// Inputs only, one row per point, for prediction requests.
[[nodiscard]] Eigen::MatrixXd read_inputs(const std::filesystem::path& path);

// Shortest decimal text that reads back to the same double.
[[nodiscard]] std::string format_double(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<Eigen::VectorXd>& columns);

struct PredictionTable {
  Eigen::MatrixXd X;
  Prediction prediction;
  Eigen::VectorXd lower95;
  Eigen::VectorXd upper95;
};

// Columns: the inputs (t, or x1..xP), mean, var, lower95, upper95,
// variance_mode. Intervals are mean -/+ 1.96 sqrt(var).
void write_predictions_csv(const std::filesystem::path& path, const Eigen::MatrixXd& X, const Prediction& p);
void write_predictions_csv(std::ostream& out, const Eigen::MatrixXd& X, const Prediction& p);
[[nodiscard]] PredictionTable read_predictions_csv(const std::filesystem::path& path);

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumEstimate& spec);

}  // namespace slsm
