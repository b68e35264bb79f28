#include "slsm/dataset.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "slsm/errors.hpp"

namespace slsm {

void Dataset::validate() const {
  if (y.size() == 0) throw DataError("dataset is empty");
  if (X.rows() != y.size()) {
    throw DataError("dataset has " + std::to_string(X.rows()) + " input rows but " + std::to_string(y.size()) + " targets");
  }
  if (X.cols() < 1) throw DataError("dataset needs at least one input column");
  if (!X.allFinite() || !y.allFinite()) throw DataError("dataset contains non-finite values");
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto at = static_cast<Eigen::Index>(i);
    const auto from = static_cast<Eigen::Index>(rows[i]);
    out.X.row(at) = X.row(from);
    out.y[at] = y[from];
  }
  out.names = names;
  if (X.cols() == 1 && out.y.size() >= 2) {
    out.uniform = is_uniform(out.X.col(0), &out.delta_t);
  } else {
    out.delta_t = delta_t;
    out.uniform = false;
  }
  return out;
}

Dataset Dataset::head(std::size_t count) const {
  std::vector<std::size_t> rows(count);
  for (std::size_t i = 0; i < count; ++i) rows[i] = i;
  return subset(rows);
}

Dataset Dataset::tail_from(std::size_t first) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = first; i < size(); ++i) rows.push_back(i);
  return subset(rows);
}

Dataset Dataset::series(const Eigen::VectorXd& y, double dt, double t0) {
  Dataset d;
  d.y = y;
  d.X.resize(y.size(), 1);
  for (Eigen::Index i = 0; i < y.size(); ++i) d.X(i, 0) = t0 + dt * static_cast<double>(i);
  d.delta_t = dt;
  d.uniform = true;
  d.validate();
  return d;
}

Dataset Dataset::from_arrays(Eigen::MatrixXd X, Eigen::VectorXd y) {
  Dataset d;
  d.X = std::move(X);
  d.y = std::move(y);
  d.validate();
  if (d.X.cols() == 1 && d.y.size() >= 2) d.uniform = is_uniform(d.X.col(0), &d.delta_t);
  return d;
}

bool is_uniform(const Eigen::VectorXd& t, double* delta_t) {
  if (t.size() < 2) return false;
  const double mean_gap = (t[t.size() - 1] - t[0]) / static_cast<double>(t.size() - 1);
  if (delta_t != nullptr) *delta_t = mean_gap;
  if (!(mean_gap > 0.0)) return false;
  for (Eigen::Index i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - mean_gap) > 1e-6 * mean_gap) return false;
  }
  return true;
}

Normalization Normalization::fit(const Dataset& data) {
  data.validate();
  Normalization n;
  const double count = static_cast<double>(data.y.size());
  n.y_mean = data.y.mean();
  const double var = (data.y.array() - n.y_mean).square().sum() / count;
  n.y_std = var > 0.0 ? std::sqrt(var) : 1.0;
  if (data.X.cols() > 1) {
    n.x_means = data.X.colwise().mean().transpose();
    n.x_stds.resize(data.X.cols());
    for (Eigen::Index c = 0; c < data.X.cols(); ++c) {
      const double v = (data.X.col(c).array() - n.x_means[c]).square().sum() / count;
      n.x_stds[c] = v > 0.0 ? std::sqrt(v) : 1.0;
    }
  }
  return n;
}

Eigen::MatrixXd Normalization::apply_x(const Eigen::MatrixXd& X) const {
  if (x_means.size() == 0) return X;
  Eigen::MatrixXd out = X;
  for (Eigen::Index c = 0; c < X.cols(); ++c) out.col(c) = (X.col(c).array() - x_means[c]) / x_stds[c];
  return out;
}

Eigen::VectorXd Normalization::apply_y(const Eigen::VectorXd& y) const { return (y.array() - y_mean) / y_std; }

Dataset Normalization::apply(const Dataset& data) const {
  Dataset out = data;
  out.X = apply_x(data.X);
  out.y = apply_y(data.y);
  return out;
}

namespace {

// 64-bit FNV-1a over shapes and raw element bytes.
class Fnv1a {
 public:
  void mix(const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= bytes[i];
      h_ *= 1099511628211ULL;
    }
  }
  void mix(const Eigen::MatrixXd& M) {
    const std::int64_t rows = M.rows();
    const std::int64_t cols = M.cols();
    mix(&rows, sizeof rows);
    mix(&cols, sizeof cols);
    // Element by element so the layout is explicit.
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      for (Eigen::Index r = 0; r < M.rows(); ++r) {
        const double v = M(r, c);
        mix(&v, sizeof v);
      }
    }
  }
  [[nodiscard]] std::string hex() const {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h_;
    return out.str();
  }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

}  // namespace

std::string fingerprint(const Dataset& data) {
  Fnv1a h;
  h.mix(data.X);
  for (Eigen::Index r = 0; r < data.y.size(); ++r) {
    const double v = data.y[r];
    h.mix(&v, sizeof v);
  }
  return h.hex();
}

std::string fingerprint(const Eigen::MatrixXd& M) {
  Fnv1a h;
  h.mix(M);
  return h.hex();
}

}  // namespace slsm
