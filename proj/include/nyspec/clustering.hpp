#pragma once

#include "nyspec/kernel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nyspec {

struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;
  double inertia = 0.0;
  std::uint64_t seed = 0;
  std::string pipeline;
  /// k x d cluster means of the final labelling.
  Matrix centroids;
  int iterations = 0;
  /// Objective after each assignment step.
  std::vector<double> inertia_trace;

  int distinct_labels() const;
};

enum class EmbeddingSource { exact, approximate };

struct SpectralEmbedding {
  Matrix vectors; // n x k, columns are generalized eigenvectors u
  Vector eigenvalues;
  EmbeddingSource source = EmbeddingSource::exact;
};

struct LaplacianPair {
  Matrix laplacian; // P = D - S
  Vector degrees;   // diagonal of D
};

/// D_ii = row sums of S, P = D - S.
LaplacianPair laplacian_pair(const Matrix& similarity);

enum class EigenOrder { ascending, descending };

/// Floor applied to degrees before the D^{-1/2} reduction.
Vector regularized_degrees(const Vector& degrees);

/// Solves P u = lambda D u through the symmetric problem
/// D^{-1/2} P D^{-1/2} v = lambda v, u = D^{-1/2} v, and returns k pairs in
/// the requested order.
SpectralEmbedding generalized_eigen(const Matrix& laplacian, const Vector& degrees, int k, EigenOrder order);

struct KMeansOptions {
  int max_iter = 300;
  double tol = 1e-6;
};

/// Lloyd's algorithm with k-means++ seeding. An empty cluster is re-seeded
/// with the point farthest from its own centroid. Returned centroids are the
/// exact means of the returned labels.
ClusterAssignment kmeans(const Matrix& points, int k, std::uint64_t seed, KMeansOptions options = {});

/// Number of distinct rows (exact comparison).
Eigen::Index distinct_row_count(const Matrix& points);

/// Scale each row to unit Euclidean length; zero rows stay zero.
Matrix normalize_rows(Matrix z);

} // namespace nyspec
