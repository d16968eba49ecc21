#pragma once

#include "nyspec/kernel.hpp"
#include "nyspec/sampling.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nyspec {

/// Landmark-block eigenpairs and their extension to every point.
struct NystromModel {
  Matrix landmark_eigvecs;  // U_A, m x k
  Vector landmark_eigvals;  // Lambda_A, descending
  Matrix extended_eigvecs;  // U~, n x k
  LandmarkSet landmarks;
  int rank = 0;
  KernelSpec spec;

  Eigen::Index points() const noexcept { return extended_eigvecs.rows(); }
};

/// Eigenvalues at or below this are treated as zero when inverting Lambda_A.
double rank_cutoff(double largest_eigenvalue);

/// Nystrom extension from precomputed blocks. `landmark_block` is m x m.
/// `cross_block` holds one row per point that is not a landmark row; for
/// index landmarks `landmark_rows[i]` gives the dataset row of landmark i and
/// the cross rows fill the remaining rows in ascending order. For virtual
/// landmarks `landmark_rows` is empty and `cross_block` covers all n points.
NystromModel fit_blocks(const Matrix& landmark_block, const Matrix& cross_block,
                        std::span<const PointId> landmark_rows, Eigen::Index n, int k);

/// Standard fit: A over landmarks, B between the other points and landmarks.
NystromModel fit(const FeatureMatrix& data, const LandmarkSet& landmarks, int k, const KernelSpec& spec);

/// Fit keeping every eigenpair above the rank cutoff (pseudo-inverse of A).
NystromModel fit_full_rank(const FeatureMatrix& data, const LandmarkSet& landmarks, const KernelSpec& spec);

/// Dense S~ = U~ diag(Lambda_A) U~^T, exactly symmetric.
SimilarityMatrix reconstruct(const NystromModel& model);

struct FrobeniusError {
  double value = 0.0;     // ||S - S~||_F (or its estimate)
  double reference = 0.0; // ||S||_F (or its estimate)
  std::size_t pairs = 0;  // 0 in exact mode
  double relative() const { return reference > 0.0 ? value / reference : value; }
};

/// Exact ||S - S~||_F, streamed entry by entry (n^2 must fit the budget).
FrobeniusError frobenius_error(const FeatureMatrix& data, const NystromModel& model, const KernelSpec& spec);

/// Estimate from `pairs` uniformly drawn entries; the squared value is an
/// unbiased estimate of ||S - S~||_F^2.
FrobeniusError estimate_frobenius_error(const FeatureMatrix& data, const NystromModel& model,
                                        const KernelSpec& spec, std::size_t pairs, std::uint64_t seed);

using LandmarkSampler = std::function<LandmarkSet(const FeatureMatrix&, std::uint64_t seed)>;

struct NystromEnsemble {
  std::vector<NystromModel> experts;
  std::vector<double> weights;
  std::vector<std::uint64_t> expert_seeds;
  std::vector<std::string> warnings;
};

std::uint64_t expert_seed(std::uint64_t seed, int expert);

/// p experts with uniform weights. An expert whose landmark block has fewer
/// than k usable eigenvalues is dropped and the weights renormalised.
NystromEnsemble ensemble_fit(const FeatureMatrix& data, const LandmarkSampler& sampler, int p, int k,
                             const KernelSpec& spec, std::uint64_t seed);

/// Same, keeping each expert at its full numerical rank.
NystromEnsemble ensemble_fit_full_rank(const FeatureMatrix& data, const LandmarkSampler& sampler, int p,
                                       const KernelSpec& spec, std::uint64_t seed);

/// Sum_i mu_i S~^(i).
Matrix ensemble_reconstruct(const NystromEnsemble& ensemble);

/// Frobenius error of a dense approximation against the exact kernel matrix.
FrobeniusError frobenius_error_dense(const FeatureMatrix& data, const Matrix& approximation,
                                     const KernelSpec& spec);

/// Flip each column so its largest-magnitude entry is positive.
Matrix align_signs(Matrix vectors);

/// Weighted average of sign-aligned per-expert embeddings.
Matrix combine_embeddings(const std::vector<Matrix>& embeddings, const std::vector<double>& weights);

} // namespace nyspec
