#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nyspec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using PointId = Eigen::Index;

/// Raw dataset: one point per row, optional ground-truth labels.
struct FeatureMatrix {
  Matrix points;
  std::optional<std::vector<int>> labels;
  std::string name;

  Eigen::Index size() const noexcept { return points.rows(); }
  Eigen::Index dim() const noexcept { return points.cols(); }
  int class_count() const;

  /// Throws ConfigError when n < 2, d < 1, an entry is non-finite, or labels
  /// are not contiguous 0..C-1 of length n.
  void validate() const;
};

enum class KernelKind { cosine, rbf };
enum class ZeroVectorPolicy { similarity_zero, error };

struct KernelSpec {
  KernelKind kind = KernelKind::cosine;
  double bandwidth = 1.0; // rbf only
  ZeroVectorPolicy zero_vector_policy = ZeroVectorPolicy::similarity_zero;

  static KernelSpec cosine() { return {}; }
  static KernelSpec rbf(double bandwidth) { return {KernelKind::rbf, bandwidth, ZeroVectorPolicy::similarity_zero}; }

  void validate() const;
};

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& text);

/// Rectangular block of kernel values. row_index / col_index hold point ids
/// (or landmark slots for virtual landmarks).
struct SimilarityMatrix {
  Matrix values;
  std::vector<PointId> row_index;
  std::vector<PointId> col_index;
};

/// Dense-matrix entry cap. Defaults to 1e8, overridden by NYSPEC_MEM_BUDGET.
std::size_t memory_budget();
/// Throws MemoryBudgetExceeded when rows * cols exceeds the cap.
void check_budget(std::size_t rows, std::size_t cols, const char* what);

double kernel_value(std::span<const double> a, std::span<const double> b, const KernelSpec& spec);
double kernel_value(const Vector& a, const Vector& b, const KernelSpec& spec);

/// Kernel values between the listed rows of data (rows x cols ids).
SimilarityMatrix similarity_block(std::span<const PointId> rows, std::span<const PointId> cols,
                                  const FeatureMatrix& data, const KernelSpec& spec);

/// Full n x n similarity matrix; subject to the memory budget.
SimilarityMatrix full_similarity(const FeatureMatrix& data, const KernelSpec& spec);

/// Kernel values between every row of `left` and every row of `right`.
/// Used for virtual (centroid) landmarks that are not rows of the dataset.
Matrix cross_similarity(const Matrix& left, const Matrix& right, const KernelSpec& spec);

enum class Scaling { none, standardize, minmax };
std::string to_string(Scaling scaling);
Scaling parse_scaling(const std::string& text);

/// Per-column feature scaling. Constant columns are left centred at zero.
FeatureMatrix apply_scaling(FeatureMatrix data, Scaling scaling);

} // namespace nyspec
