#include "slsm/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "slsm/errors.hpp"

namespace slsm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view cell, double& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Eigen::MatrixXd numeric(const Table& t, const std::string& source) {
  const auto cols = t.rows.empty() ? 0 : t.rows.front().size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!parse_number(t.rows[r][c], v)) {
        throw DataError(source + ": row " + std::to_string(t.lines[r]) + ", column " + std::to_string(c + 1) +
                        ": '" + t.rows[r][c] + "' is not a finite number");
      }
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return M;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Table parse_table(std::string_view text, const std::string& source) {
  Table t;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (t.header.empty() && t.rows.empty()) {
      expected = cells.size();
      // A header row has no numeric cells at all; a row with only some bad
      // cells is data and fails with a row/column message later.
      const bool is_header = std::none_of(cells.begin(), cells.end(), [](const std::string& c) {
        double v = 0.0;
        return parse_number(c, v);
      });
      if (is_header) {
        t.header = std::move(cells);
        continue;
      }
    }
    if (cells.size() != expected) {
      throw DataError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " columns, expected " + std::to_string(expected));
    }
    t.rows.push_back(std::move(cells));
    t.lines.push_back(line_no);
  }
  if (t.rows.empty()) throw DataError(source + ": no data rows");
  return t;
}

Table read_table(const std::filesystem::path& path) { return parse_table(slurp(path), path.string()); }

Dataset parse_dataset(std::string_view text, const std::string& source) {
  const Table t = parse_table(text, source);
  const Eigen::MatrixXd M = numeric(t, source);
  const auto n = M.rows();
  const auto cols = M.cols();
  Dataset d;
  if (cols == 1) {
    Eigen::MatrixXd X(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) X(i, 0) = static_cast<double>(i);
    d = Dataset::from_arrays(std::move(X), M.col(0));
    d.names = {"t", t.header.empty() ? "y" : t.header[0]};
    if (n == 1) d.uniform = true;
  } else {
    d = Dataset::from_arrays(M.leftCols(cols - 1), M.col(cols - 1));
    if (!t.header.empty()) {
      d.names = t.header;
    } else {
      for (Eigen::Index c = 0; c + 1 < cols; ++c) d.names.push_back(cols == 2 ? "t" : "x" + std::to_string(c + 1));
      d.names.push_back("y");
    }
  }
  return d;
}

Dataset read_dataset(const std::filesystem::path& path) { return parse_dataset(slurp(path), path.string()); }

Eigen::MatrixXd read_inputs(const std::filesystem::path& path) {
  const Table t = read_table(path);
  return numeric(t, path.string());
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<Eigen::VectorXd>& columns) {
  if (header.size() != columns.size()) throw UsageError("write_csv: header and column counts differ");
  auto out = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  const Eigen::Index rows = columns.empty() ? 0 : columns.front().size();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_double(columns[c][r]);
    out << '\n';
  }
}

void write_predictions_csv(std::ostream& out, const Eigen::MatrixXd& X, const Prediction& p) {
  const auto P = X.cols();
  for (Eigen::Index c = 0; c < P; ++c) out << (P == 1 ? std::string("t") : "x" + std::to_string(c + 1)) << ',';
  out << "mean,var,lower95,upper95,variance_mode\n";
  const char* mode = p.mode == VarianceMode::latent ? "latent" : "observation";
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index c = 0; c < P; ++c) out << format_double(X(i, c)) << ',';
    const double half = 1.96 * std::sqrt(p.variance[i]);
    out << format_double(p.mean[i]) << ',' << format_double(p.variance[i]) << ',' << format_double(p.mean[i] - half)
        << ',' << format_double(p.mean[i] + half) << ',' << mode << '\n';
  }
}

void write_predictions_csv(const std::filesystem::path& path, const Eigen::MatrixXd& X, const Prediction& p) {
  auto out = open_out(path);
  write_predictions_csv(out, X, p);
}

PredictionTable read_predictions_csv(const std::filesystem::path& path) {
  Table t = read_table(path);
  if (t.header.size() < 6 || t.header.back() != "variance_mode") {
    throw DataError(path.string() + ": not a predictions file");
  }
  const std::string mode = t.rows.front().back();
  for (auto& row : t.rows) {
    if (row.back() != mode) throw DataError(path.string() + ": mixed variance modes");
    row.pop_back();
  }
  t.header.pop_back();
  const Eigen::MatrixXd M = numeric(t, path.string());
  const auto P = M.cols() - 4;
  PredictionTable out;
  out.X = M.leftCols(P);
  out.prediction.mean = M.col(P);
  out.prediction.variance = M.col(P + 1);
  out.lower95 = M.col(P + 2);
  out.upper95 = M.col(P + 3);
  if (mode == "latent") {
    out.prediction.mode = VarianceMode::latent;
  } else if (mode == "observation") {
    out.prediction.mode = VarianceMode::observation;
  } else {
    throw DataError(path.string() + ": unknown variance mode '" + mode + "'");
  }
  return out;
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumEstimate& spec) {
  write_csv(path, {"freq", "power"}, {spec.freqs, spec.powers});
}

}  // namespace slsm
