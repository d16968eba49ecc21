#include "nyspec/nystrom.hpp"

#include "nyspec/error.hpp"
#include "nyspec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nyspec {

double rank_cutoff(double largest_eigenvalue) { return std::max(1e-10, 1e-12 * largest_eigenvalue); }

namespace {

constexpr int all_usable = -1;

NystromModel fit_blocks_impl(const Matrix& landmark_block, const Matrix& cross_block,
                             std::span<const PointId> landmark_rows, Eigen::Index n, int k) {
  const Eigen::Index m = landmark_block.rows();
  if (landmark_block.cols() != m)
    throw LengthMismatch("nystrom: landmark block must be square");
  if (k != all_usable && (k < 1 || k > m))
    throw ConfigError("nystrom: rank k must lie in 1..m (k=" + std::to_string(k) + ", m=" + std::to_string(m) + ")");
  const bool indexed = !landmark_rows.empty();
  if (indexed && static_cast<Eigen::Index>(landmark_rows.size()) != m)
    throw LengthMismatch("nystrom: landmark row count does not match block size");
  const Eigen::Index expected_cross = indexed ? n - m : n;
  if (cross_block.rows() != expected_cross || (expected_cross > 0 && cross_block.cols() != m))
    throw LengthMismatch("nystrom: cross block has the wrong shape");

  const Matrix sym = 0.5 * (landmark_block + landmark_block.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw SolverFailure("nystrom: landmark eigendecomposition failed");
  const Vector values = solver.eigenvalues().reverse();
  const Matrix vectors = solver.eigenvectors().rowwise().reverse();

  const double cutoff = rank_cutoff(values(0));
  int usable = 0;
  while (usable < m && values(usable) > cutoff)
    ++usable;
  if (k == all_usable) {
    if (usable == 0)
      throw RankDeficientLandmarks("nystrom: landmark block has no eigenvalue above the rank cutoff", 0);
    k = usable;
  }
  if (usable < k)
    throw RankDeficientLandmarks("nystrom: only " + std::to_string(usable) + " landmark eigenvalues exceed the cutoff, " +
                                     std::to_string(k) + " requested",
                                 usable);

  NystromModel model;
  model.rank = k;
  model.landmark_eigvals = values.head(k);
  model.landmark_eigvecs = vectors.leftCols(k);

  Matrix extended(expected_cross, k);
  if (expected_cross > 0)
    extended = cross_block * model.landmark_eigvecs * model.landmark_eigvals.cwiseInverse().asDiagonal();

  if (!indexed) {
    model.extended_eigvecs = std::move(extended);
    return model;
  }
  model.extended_eigvecs.resize(n, k);
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const PointId row = landmark_rows[static_cast<std::size_t>(i)];
    if (row < 0 || row >= n || slot[static_cast<std::size_t>(row)] >= 0)
      throw ConfigError("nystrom: invalid or repeated landmark row");
    slot[static_cast<std::size_t>(row)] = i;
  }
  Eigen::Index next = 0;
  for (Eigen::Index row = 0; row < n; ++row) {
    const Eigen::Index s = slot[static_cast<std::size_t>(row)];
    if (s >= 0)
      model.extended_eigvecs.row(row) = model.landmark_eigvecs.row(s);
    else
      model.extended_eigvecs.row(row) = extended.row(next++);
  }
  return model;
}

NystromModel fit_impl(const FeatureMatrix& data, const LandmarkSet& landmarks, int k, const KernelSpec& spec) {
  landmarks.validate(data);
  const Matrix lpts = landmarks.points(data);
  const Matrix a = cross_similarity(lpts, lpts, spec);
  const Eigen::Index n = data.size();
  Matrix b;
  if (landmarks.is_virtual()) {
    b = cross_similarity(data.points, lpts, spec);
  } else {
    std::vector<char> is_landmark(static_cast<std::size_t>(n), 0);
    for (PointId id : landmarks.indices)
      is_landmark[static_cast<std::size_t>(id)] = 1;
    std::vector<PointId> others;
    for (PointId i = 0; i < n; ++i)
      if (!is_landmark[static_cast<std::size_t>(i)])
        others.push_back(i);
    b = similarity_block(others, landmarks.indices, data, spec).values;
  }
  const std::span<const PointId> rows =
      landmarks.is_virtual() ? std::span<const PointId>{} : std::span<const PointId>(landmarks.indices);
  NystromModel model = fit_blocks_impl(a, b, rows, n, k);
  model.landmarks = landmarks;
  model.spec = spec;
  return model;
}

// Applies f(row_begin, exact_chunk, approx_chunk) over row chunks of S.
template <class Fn>
void for_each_chunk(const FeatureMatrix& data, const KernelSpec& spec, const Matrix& left, const Matrix& right,
                    Fn&& fn) {
  const Eigen::Index n = data.size();
  constexpr Eigen::Index chunk = 256;
  std::vector<PointId> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), PointId{0});
  for (Eigen::Index start = 0; start < n; start += chunk) {
    const Eigen::Index rows = std::min(chunk, n - start);
    const std::span<const PointId> ids(all.data() + start, static_cast<std::size_t>(rows));
    const Matrix exact = similarity_block(ids, all, data, spec).values;
    const Matrix approx = left.middleRows(start, rows) * right.transpose();
    fn(exact, approx);
  }
}

} // namespace

NystromModel fit_blocks(const Matrix& landmark_block, const Matrix& cross_block,
                        std::span<const PointId> landmark_rows, Eigen::Index n, int k) {
  return fit_blocks_impl(landmark_block, cross_block, landmark_rows, n, k);
}

NystromModel fit(const FeatureMatrix& data, const LandmarkSet& landmarks, int k, const KernelSpec& spec) {
  if (k < 1)
    throw ConfigError("nystrom: rank k must be at least 1");
  return fit_impl(data, landmarks, k, spec);
}

NystromModel fit_full_rank(const FeatureMatrix& data, const LandmarkSet& landmarks, const KernelSpec& spec) {
  return fit_impl(data, landmarks, all_usable, spec);
}

SimilarityMatrix reconstruct(const NystromModel& model) {
  const Eigen::Index n = model.points();
  check_budget(static_cast<std::size_t>(n), static_cast<std::size_t>(n), "reconstruct");
  const Matrix& u = model.extended_eigvecs;
  SimilarityMatrix out;
  out.values = (u * model.landmark_eigvals.asDiagonal()) * u.transpose();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i)
      out.values(i, j) = out.values(j, i);
  out.row_index.resize(static_cast<std::size_t>(n));
  std::iota(out.row_index.begin(), out.row_index.end(), PointId{0});
  out.col_index = out.row_index;
  return out;
}

FrobeniusError frobenius_error(const FeatureMatrix& data, const NystromModel& model, const KernelSpec& spec) {
  const Eigen::Index n = data.size();
  if (model.points() != n)
    throw LengthMismatch("frobenius_error: model and dataset sizes differ");
  check_budget(static_cast<std::size_t>(n), static_cast<std::size_t>(n), "frobenius_error");
  const Matrix left = model.extended_eigvecs * model.landmark_eigvals.asDiagonal();
  double diff_sq = 0.0, ref_sq = 0.0;
  for_each_chunk(data, spec, left, model.extended_eigvecs, [&](const Matrix& exact, const Matrix& approx) {
    diff_sq += (exact - approx).squaredNorm();
    ref_sq += exact.squaredNorm();
  });
  return {std::sqrt(diff_sq), std::sqrt(ref_sq), 0};
}

FrobeniusError frobenius_error_dense(const FeatureMatrix& data, const Matrix& approximation,
                                     const KernelSpec& spec) {
  const Eigen::Index n = data.size();
  if (approximation.rows() != n || approximation.cols() != n)
    throw LengthMismatch("frobenius_error: approximation shape mismatch");
  double diff_sq = 0.0, ref_sq = 0.0;
  constexpr Eigen::Index chunk = 256;
  std::vector<PointId> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), PointId{0});
  for (Eigen::Index start = 0; start < n; start += chunk) {
    const Eigen::Index rows = std::min(chunk, n - start);
    const std::span<const PointId> ids(all.data() + start, static_cast<std::size_t>(rows));
    const Matrix exact = similarity_block(ids, all, data, spec).values;
    diff_sq += (exact - approximation.middleRows(start, rows)).squaredNorm();
    ref_sq += exact.squaredNorm();
  }
  return {std::sqrt(diff_sq), std::sqrt(ref_sq), 0};
}

FrobeniusError estimate_frobenius_error(const FeatureMatrix& data, const NystromModel& model,
                                        const KernelSpec& spec, std::size_t pairs, std::uint64_t seed) {
  const Eigen::Index n = data.size();
  if (model.points() != n)
    throw LengthMismatch("frobenius_error: model and dataset sizes differ");
  if (pairs == 0)
    throw ConfigError("frobenius_error: estimated mode needs at least one pair");
  Rng rng(seed);
  const Matrix left = model.extended_eigvecs * model.landmark_eigvals.asDiagonal();
  double diff_sq = 0.0, ref_sq = 0.0;
  for (std::size_t q = 0; q < pairs; ++q) {
    const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    const double exact = kernel_value(Vector(data.points.row(i)), Vector(data.points.row(j)), spec);
    const double approx = left.row(i).dot(model.extended_eigvecs.row(j));
    diff_sq += (exact - approx) * (exact - approx);
    ref_sq += exact * exact;
  }
  const double scale = static_cast<double>(n) * static_cast<double>(n) / static_cast<double>(pairs);
  return {std::sqrt(diff_sq * scale), std::sqrt(ref_sq * scale), pairs};
}

std::uint64_t expert_seed(std::uint64_t seed, int expert) {
  return derive_seed(seed, 0x656e73656d626c65ULL, static_cast<std::uint64_t>(expert));
}

namespace {

NystromEnsemble ensemble_impl(const FeatureMatrix& data, const LandmarkSampler& sampler, int p, int k,
                              const KernelSpec& spec, std::uint64_t seed) {
  if (p < 1)
    throw ConfigError("ensemble: expert count p must be at least 1");
  NystromEnsemble out;
  int last_available = 0;
  for (int e = 0; e < p; ++e) {
    const std::uint64_t s = expert_seed(seed, e);
    const LandmarkSet landmarks = sampler(data, s);
    try {
      out.experts.push_back(fit_impl(data, landmarks, k, spec));
      out.expert_seeds.push_back(s);
    } catch (const RankDeficientLandmarks& err) {
      last_available = err.available();
      out.warnings.push_back("expert " + std::to_string(e) + " dropped: " + err.what());
    }
  }
  if (out.experts.empty())
    throw RankDeficientLandmarks("ensemble: every expert was rank deficient", last_available);
  out.weights.assign(out.experts.size(), 1.0 / static_cast<double>(out.experts.size()));
  return out;
}

} // namespace

NystromEnsemble ensemble_fit(const FeatureMatrix& data, const LandmarkSampler& sampler, int p, int k,
                             const KernelSpec& spec, std::uint64_t seed) {
  if (k < 1)
    throw ConfigError("nystrom: rank k must be at least 1");
  return ensemble_impl(data, sampler, p, k, spec, seed);
}

NystromEnsemble ensemble_fit_full_rank(const FeatureMatrix& data, const LandmarkSampler& sampler, int p,
                                       const KernelSpec& spec, std::uint64_t seed) {
  return ensemble_impl(data, sampler, p, all_usable, spec, seed);
}

Matrix ensemble_reconstruct(const NystromEnsemble& ensemble) {
  if (ensemble.experts.empty())
    throw ConfigError("ensemble_reconstruct: no experts");
  Matrix sum = Matrix::Zero(ensemble.experts.front().points(), ensemble.experts.front().points());
  for (std::size_t e = 0; e < ensemble.experts.size(); ++e)
    sum += ensemble.weights[e] * reconstruct(ensemble.experts[e]).values;
  return sum;
}

Matrix align_signs(Matrix vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0)
      vectors.col(c) = -vectors.col(c);
  }
  return vectors;
}

Matrix combine_embeddings(const std::vector<Matrix>& embeddings, const std::vector<double>& weights) {
  if (embeddings.empty() || embeddings.size() != weights.size())
    throw LengthMismatch("combine_embeddings: need one weight per embedding");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  Matrix out = Matrix::Zero(embeddings.front().rows(), embeddings.front().cols());
  for (std::size_t e = 0; e < embeddings.size(); ++e) {
    if (embeddings[e].rows() != out.rows() || embeddings[e].cols() != out.cols())
      throw LengthMismatch("combine_embeddings: embedding shapes differ");
    out += (weights[e] / total) * align_signs(embeddings[e]);
  }
  return out;
}

} // namespace nyspec
