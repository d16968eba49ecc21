#pragma once

// Generators and independent oracles shared by the test binaries. Nothing in
// here calls into the library except to build FeatureMatrix values.

#include "nyspec/kernel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace testsupport {

using nyspec::FeatureMatrix;
using nyspec::Matrix;
using nyspec::Vector;

inline FeatureMatrix make_data(Matrix points, std::vector<int> labels = {}, std::string name = "synthetic") {
  FeatureMatrix data;
  data.points = std::move(points);
  if (!labels.empty())
    data.labels = std::move(labels);
  data.name = std::move(name);
  return data;
}

inline Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1.0,
                             double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = u(rng);
  return m;
}

// `groups` orthogonal directions, `per_group` identical one-hot rows each.
inline FeatureMatrix one_hot_groups(int groups, int per_group) {
  Matrix x = Matrix::Zero(groups * per_group, groups);
  std::vector<int> labels;
  for (int g = 0; g < groups; ++g)
    for (int i = 0; i < per_group; ++i) {
      x(g * per_group + i, g) = 1.0;
      labels.push_back(g);
    }
  return make_data(std::move(x), std::move(labels), "one-hot");
}

// k isotropic blobs in k dimensions. Blob c is centred `separation` sigmas out
// along axis c. Coordinates are folded into the positive orthant so every
// cosine similarity, and hence every degree, is nonnegative.
inline FeatureMatrix gaussian_blobs(int n, int k, double separation, std::uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  const double axis = separation * sigma;
  Matrix x(n, k);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int c = i % k;
    labels[static_cast<std::size_t>(i)] = c;
    for (int f = 0; f < k; ++f)
      x(i, f) = std::abs((f == c ? axis : 0.0) + noise(rng));
  }
  return make_data(std::move(x), std::move(labels), "blobs");
}

inline double oracle_cosine(const double* a, const double* b, Eigen::Index d) {
  long double dot = 0, aa = 0, bb = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  if (aa == 0 && bb == 0)
    return 1.0;
  if (aa == 0 || bb == 0)
    return 0.0;
  return static_cast<double>(dot / std::sqrt(aa * bb));
}

// Brute-force n x n cosine similarity, one scalar loop per pair.
inline Matrix oracle_similarity(const Matrix& points) {
  const Eigen::Index n = points.rows(), d = points.cols();
  const Matrix rows = points.transpose(); // contiguous columns = points
  Matrix s(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      s(i, j) = oracle_cosine(rows.col(i).data(), rows.col(j).data(), d);
  return s;
}

// Eigenvalues of P u = lambda D u from the dense two-matrix solver, ascending.
inline Vector oracle_generalized_eigenvalues(const Matrix& p, const Vector& degrees) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(p, Matrix(degrees.asDiagonal()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

inline Vector descending_eigenvalues(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().reverse();
}

// Best agreement over every bijection between predicted and true labels.
inline double oracle_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  const int kp = *std::max_element(pred.begin(), pred.end()) + 1;
  const int kt = *std::max_element(truth.begin(), truth.end()) + 1;
  const int k = std::max(kp, kt);
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      hits += perm[static_cast<std::size_t>(pred[i])] == truth[i] ? 1 : 0;
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(pred.size());
}

inline double relative_frobenius(const Matrix& approx, const Matrix& exact) {
  return (exact - approx).norm() / exact.norm();
}

} // namespace testsupport
