#include "nyspec/clustering.hpp"

#include "nyspec/error.hpp"
#include "nyspec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace nyspec {

int ClusterAssignment::distinct_labels() const {
  return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

LaplacianPair laplacian_pair(const Matrix& similarity) {
  if (similarity.rows() != similarity.cols())
    throw LengthMismatch("laplacian_pair: similarity matrix must be square");
  LaplacianPair out;
  out.degrees = similarity.rowwise().sum();
  out.laplacian = -similarity;
  out.laplacian.diagonal() += out.degrees;
  return out;
}

Vector regularized_degrees(const Vector& degrees) {
  const double max_degree = degrees.size() ? degrees.maxCoeff() : 0.0;
  const double floor = max_degree > 0.0 ? std::max(1e-12 * max_degree, 1e-300) : 1e-12;
  return degrees.cwiseMax(floor);
}

SpectralEmbedding generalized_eigen(const Matrix& laplacian, const Vector& degrees, int k, EigenOrder order) {
  const Eigen::Index n = laplacian.rows();
  if (laplacian.cols() != n || degrees.size() != n)
    throw LengthMismatch("generalized_eigen: shape mismatch");
  if (k < 1 || k > n)
    throw ConfigError("generalized_eigen: k must lie in 1..n");

  const Vector inv_sqrt = regularized_degrees(degrees).cwiseSqrt().cwiseInverse();
  Matrix reduced = inv_sqrt.asDiagonal() * laplacian * inv_sqrt.asDiagonal();
  reduced = (0.5 * (reduced + reduced.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(reduced);
  if (solver.info() != Eigen::Success)
    throw SolverFailure("generalized_eigen: symmetric eigensolver did not converge");

  SpectralEmbedding out;
  out.vectors.resize(n, k);
  out.eigenvalues.resize(k);
  for (int c = 0; c < k; ++c) {
    const Eigen::Index src = order == EigenOrder::ascending ? c : n - 1 - c;
    out.eigenvalues(c) = solver.eigenvalues()(src);
    out.vectors.col(c) = inv_sqrt.asDiagonal() * solver.eigenvectors().col(src);
  }
  return out;
}

Eigen::Index distinct_row_count(const Matrix& points) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      if (points(a, c) != points(b, c))
        return points(a, c) < points(b, c);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  Eigen::Index distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size(); ++i)
    if (less(order[i - 1], order[i]))
      ++distinct;
  return distinct;
}

Matrix normalize_rows(Matrix z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double norm = z.row(i).norm();
    if (norm > 0.0)
      z.row(i) /= norm;
  }
  return z;
}

namespace {

double squared_distance(const Matrix& points, Eigen::Index i, const Matrix& centers, Eigen::Index c) {
  double sum = 0.0;
  for (Eigen::Index f = 0; f < points.cols(); ++f) {
    const double d = points(i, f) - centers(c, f);
    sum += d * d;
  }
  return sum;
}

Matrix kmeanspp_init(const Matrix& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Matrix centers(k, points.cols());
  const auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centers.row(0) = points.row(first);
  std::vector<double> nearest(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    nearest[static_cast<std::size_t>(i)] = squared_distance(points, i, centers, 0);

  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double running = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double w = nearest[static_cast<std::size_t>(i)];
        if (w <= 0.0)
          continue;
        running += w;
        pick = i;
        if (running > target)
          break;
      }
    }
    if (pick < 0)
      throw DegenerateClustering("kmeans++: no point left at positive distance");
    centers.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      nearest[static_cast<std::size_t>(i)] =
          std::min(nearest[static_cast<std::size_t>(i)], squared_distance(points, i, centers, c));
  }
  return centers;
}

// Nearest center per point (ties to the lower center index); returns inertia.
double assign(const Matrix& points, const Matrix& centers, std::vector<int>& labels) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      const double d = squared_distance(points, i, centers, c);
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
    inertia += best;
  }
  return inertia;
}

Matrix cluster_means(const Matrix& points, const std::vector<int>& labels, int k, std::vector<int>& counts) {
  Matrix sums = Matrix::Zero(k, points.cols());
  counts.assign(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    sums.row(c) += points.row(i);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < k; ++c)
    if (counts[static_cast<std::size_t>(c)] > 0)
      sums.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  return sums;
}

// Moves the farthest point of a multi-member cluster into each empty cluster.
// Returns true when anything was re-seeded.
bool reseed_empty(const Matrix& points, Matrix& centers, std::vector<int>& labels, std::vector<int>& counts) {
  bool changed = false;
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    if (counts[static_cast<std::size_t>(c)] != 0)
      continue;
    double worst = -1.0;
    Eigen::Index donor = -1;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const int own = labels[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(own)] < 2)
        continue;
      const double d = squared_distance(points, i, centers, own);
      if (d > worst) {
        worst = d;
        donor = i;
      }
    }
    if (donor < 0)
      throw DegenerateClustering("kmeans: cannot re-seed an empty cluster");
    --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(donor)])];
    labels[static_cast<std::size_t>(donor)] = static_cast<int>(c);
    counts[static_cast<std::size_t>(c)] = 1;
    centers.row(c) = points.row(donor);
    changed = true;
  }
  return changed;
}

} // namespace

ClusterAssignment kmeans(const Matrix& points, int k, std::uint64_t seed, KMeansOptions options) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n)
    throw ConfigError("kmeans: k must lie in 1..n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  if (!points.allFinite())
    throw ConfigError("kmeans: non-finite input");
  if (distinct_row_count(points) < k)
    throw DegenerateClustering("kmeans: fewer distinct points than clusters (k=" + std::to_string(k) + ")");

  Rng rng(seed);
  Matrix centers = kmeanspp_init(points, k, rng);
  ClusterAssignment out;
  out.k = k;
  out.seed = seed;
  out.labels.assign(static_cast<std::size_t>(n), 0);
  std::vector<int> counts;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    out.inertia_trace.push_back(assign(points, centers, out.labels));
    Matrix next = cluster_means(points, out.labels, k, counts);
    const bool reseeded = reseed_empty(points, next, out.labels, counts);
    const double shift = (next - centers).rowwise().norm().maxCoeff();
    centers = std::move(next);
    out.iterations = iter + 1;
    if (!reseeded && shift < options.tol)
      break;
  }

  out.centroids = cluster_means(points, out.labels, k, counts);
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    inertia += squared_distance(points, i, out.centroids, out.labels[static_cast<std::size_t>(i)]);
  out.inertia = inertia;
  return out;
}

} // namespace nyspec
