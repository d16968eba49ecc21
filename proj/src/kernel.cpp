#include "nyspec/kernel.hpp"

#include "nyspec/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

namespace nyspec {

int FeatureMatrix::class_count() const {
  if (!labels || labels->empty())
    return 0;
  return *std::max_element(labels->begin(), labels->end()) + 1;
}

void FeatureMatrix::validate() const {
  if (points.rows() < 2)
    throw ConfigError("dataset needs at least 2 points, got " + std::to_string(points.rows()));
  if (points.cols() < 1)
    throw ConfigError("dataset needs at least 1 feature");
  if (!points.allFinite())
    throw ConfigError("dataset contains non-finite entries");
  if (labels) {
    if (static_cast<Eigen::Index>(labels->size()) != points.rows())
      throw ConfigError("label vector length does not match point count");
    std::set<int> seen(labels->begin(), labels->end());
    if (*seen.begin() != 0 || *seen.rbegin() != static_cast<int>(seen.size()) - 1)
      throw ConfigError("labels must be contiguous integers 0..C-1");
  }
}

void KernelSpec::validate() const {
  if (kind == KernelKind::rbf && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
    throw ConfigError("rbf bandwidth must be positive");
}

std::string to_string(KernelKind kind) { return kind == KernelKind::cosine ? "cosine" : "rbf"; }

KernelKind parse_kernel_kind(const std::string& text) {
  if (text == "cosine")
    return KernelKind::cosine;
  if (text == "rbf")
    return KernelKind::rbf;
  throw ConfigError("unknown kernel '" + text + "'");
}

std::size_t memory_budget() {
  constexpr std::size_t fallback = 100'000'000;
  const char* env = std::getenv("NYSPEC_MEM_BUDGET");
  if (env == nullptr || *env == '\0')
    return fallback;
  char* end = nullptr;
  const double value = std::strtod(env, &end);
  if (end == env || !(value > 0.0))
    return fallback;
  return static_cast<std::size_t>(value);
}

void check_budget(std::size_t rows, std::size_t cols, const char* what) {
  const std::size_t cap = memory_budget();
  if (cols != 0 && rows > cap / cols) {
    std::ostringstream msg;
    msg << what << ": " << rows << " x " << cols << " entries exceeds the dense budget of " << cap;
    throw MemoryBudgetExceeded(msg.str());
  }
}

double kernel_value(std::span<const double> a, std::span<const double> b, const KernelSpec& spec) {
  if (a.size() != b.size())
    throw LengthMismatch("kernel_value: dimension mismatch");
  if (spec.kind == KernelKind::rbf) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = a[i] - b[i];
      sq += diff * diff;
    }
    return std::exp(-sq / (2.0 * spec.bandwidth * spec.bandwidth));
  }

  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) {
    if (spec.zero_vector_policy == ZeroVectorPolicy::error)
      throw DegenerateVector("cosine similarity of a zero vector");
    // Two zero vectors are the same vector.
    return (aa == 0.0 && bb == 0.0) ? 1.0 : 0.0;
  }
  // sqrt(fl(x*x)) == x, so identical vectors give exactly 1.
  double denom = std::sqrt(aa * bb);
  if (!std::isfinite(denom) || denom == 0.0)
    denom = std::sqrt(aa) * std::sqrt(bb);
  return std::clamp(dot / denom, -1.0, 1.0);
}

double kernel_value(const Vector& a, const Vector& b, const KernelSpec& spec) {
  return kernel_value(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                      std::span<const double>(b.data(), static_cast<std::size_t>(b.size())), spec);
}

namespace {

// Column-major d x n copy so that each point is contiguous.
Matrix columns_of(const Matrix& points) { return points.transpose(); }

std::span<const double> column(const Matrix& cols, Eigen::Index j) {
  return {cols.col(j).data(), static_cast<std::size_t>(cols.rows())};
}

} // namespace

SimilarityMatrix similarity_block(std::span<const PointId> rows, std::span<const PointId> cols,
                                  const FeatureMatrix& data, const KernelSpec& spec) {
  check_budget(rows.size(), cols.size(), "similarity_block");
  const Eigen::Index n = data.size();
  auto valid = [n](PointId id) { return id >= 0 && id < n; };
  if (!std::all_of(rows.begin(), rows.end(), valid) || !std::all_of(cols.begin(), cols.end(), valid))
    throw ConfigError("similarity_block: point id out of range");

  const Matrix pts = columns_of(data.points);
  SimilarityMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.row_index.assign(rows.begin(), rows.end());
  out.col_index.assign(cols.begin(), cols.end());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto b = column(pts, cols[j]);
    for (std::size_t i = 0; i < rows.size(); ++i)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          kernel_value(column(pts, rows[i]), b, spec);
  }
  return out;
}

SimilarityMatrix full_similarity(const FeatureMatrix& data, const KernelSpec& spec) {
  std::vector<PointId> ids(static_cast<std::size_t>(data.size()));
  for (std::size_t i = 0; i < ids.size(); ++i)
    ids[i] = static_cast<PointId>(i);
  return similarity_block(ids, ids, data, spec);
}

Matrix cross_similarity(const Matrix& left, const Matrix& right, const KernelSpec& spec) {
  if (left.cols() != right.cols())
    throw LengthMismatch("cross_similarity: dimension mismatch");
  check_budget(static_cast<std::size_t>(left.rows()), static_cast<std::size_t>(right.rows()),
               "cross_similarity");
  const Matrix lc = columns_of(left);
  const Matrix rc = columns_of(right);
  Matrix out(left.rows(), right.rows());
  for (Eigen::Index j = 0; j < right.rows(); ++j)
    for (Eigen::Index i = 0; i < left.rows(); ++i)
      out(i, j) = kernel_value(column(lc, i), column(rc, j), spec);
  return out;
}

std::string to_string(Scaling scaling) {
  switch (scaling) {
  case Scaling::standardize:
    return "standardize";
  case Scaling::minmax:
    return "minmax";
  default:
    return "none";
  }
}

Scaling parse_scaling(const std::string& text) {
  if (text == "none")
    return Scaling::none;
  if (text == "standardize")
    return Scaling::standardize;
  if (text == "minmax")
    return Scaling::minmax;
  throw ConfigError("unknown scaling '" + text + "'");
}

FeatureMatrix apply_scaling(FeatureMatrix data, Scaling scaling) {
  if (scaling == Scaling::none)
    return data;
  Matrix& x = data.points;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    auto col = x.col(c);
    if (scaling == Scaling::standardize) {
      const double mean = col.mean();
      col.array() -= mean;
      const double sd = std::sqrt(col.squaredNorm() / n);
      if (sd > 0.0)
        col /= sd;
    } else {
      const double lo = col.minCoeff();
      const double span = col.maxCoeff() - lo;
      col.array() -= lo;
      if (span > 0.0)
        col /= span;
    }
  }
  return data;
}

} // namespace nyspec
