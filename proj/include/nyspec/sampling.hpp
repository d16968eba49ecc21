#pragma once

#include "nyspec/kernel.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nyspec {

enum class LandmarkKind { indices, virtual_points };

/// Landmarks are either rows of the dataset or synthetic (centroid) points.
struct LandmarkSet {
  LandmarkKind kind = LandmarkKind::indices;
  std::vector<PointId> indices; // kind == indices
  Matrix coordinates;           // kind == virtual_points, m x d
  std::string sampler;
  std::uint64_t seed = 0;
  /// Virtual landmarks only: dataset rows the centroids were built from, and
  /// the centroid slot of each of those rows.
  std::vector<PointId> support;
  std::vector<int> support_cluster;

  Eigen::Index size() const noexcept;
  bool is_virtual() const noexcept { return kind == LandmarkKind::virtual_points; }
  /// m x d coordinates of the landmarks.
  Matrix points(const FeatureMatrix& data) const;
  void validate(const FeatureMatrix& data) const;
};

struct SamplerConfig {
  int m = 2;
  /// Intermediate MS3 count for CMS3; 0 means 2m clipped to n.
  int r = 0;
  double gamma = 0.1;
  /// Subsample fraction for the eigenspectrum switch; unset means gamma.
  std::optional<double> sm_fraction;
  std::uint64_t seed = 0;
  /// Sum only over landmarks 0..i-2 at step i (literal reading of the
  /// printed summation bound).
  bool strict_alg1_bound = false;

  int resolved_r(Eigen::Index n) const;
  double resolved_sm_fraction() const { return sm_fraction.value_or(gamma); }
  void validate(Eigen::Index n) const;
};

struct SpectrumDiagnostic {
  Vector eigenvalues; // generalized Laplacian eigenvalues, descending
  double lambda2 = 0.0;
  double tail_term = 0.0; // |sm| * lambda_|sm|
  bool use_cms3 = false;
  std::vector<PointId> subsample;
  /// Same test evaluated on the eigenvalues of S_sm itself (logged only).
  Vector similarity_eigenvalues;
  double similarity_lambda2 = 0.0;
  double similarity_tail_term = 0.0;
  bool similarity_use_cms3 = false;
};

/// Candidate pool size for a greedy step: max(1, ceil(gamma * remaining)).
std::size_t candidate_pool_size(double gamma, std::size_t remaining);

LandmarkSet random_sample(const FeatureMatrix& data, int m, std::uint64_t seed);
LandmarkSet kmeans_sample(const FeatureMatrix& data, int m, std::uint64_t seed);
LandmarkSet min_similarity_sample(const FeatureMatrix& data, int m, double gamma, const KernelSpec& spec,
                                  std::uint64_t seed, bool strict_alg1_bound = false);
LandmarkSet ms3_sample(const FeatureMatrix& data, int m, double gamma, const KernelSpec& spec,
                       std::uint64_t seed, bool strict_alg1_bound = false);
LandmarkSet cms3_sample(const FeatureMatrix& data, const SamplerConfig& cfg, const KernelSpec& spec);
SpectrumDiagnostic spectrum_switch(const FeatureMatrix& data, const SamplerConfig& cfg, const KernelSpec& spec);
LandmarkSet cms3_tuned_sample(const FeatureMatrix& data, const SamplerConfig& cfg, const KernelSpec& spec,
                              SpectrumDiagnostic* diagnostic = nullptr);

enum class GreedyScore { similarity, squared_similarity };

struct GreedyChoice {
  PointId index = -1;
  double score = 0.0;
};

/// One greedy step: argmin over `pool` of sum_j score(sim(x, selected_j)),
/// ties to the lowest point index.
GreedyChoice greedy_argmin(const FeatureMatrix& data, std::span<const PointId> selected,
                           std::span<const PointId> pool, const KernelSpec& spec, GreedyScore score);

/// Sampler names accepted by the CLI and the experiment runner.
enum class SamplerKind { rs, ks, ss, ms3, cms3, cms3_tuned };
std::string to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(const std::string& text);

/// Dispatch by name. cfg.m, cfg.seed and the greedy parameters are used as
/// each sampler needs them.
LandmarkSet sample_landmarks(SamplerKind kind, const FeatureMatrix& data, const SamplerConfig& cfg,
                             const KernelSpec& spec, SpectrumDiagnostic* diagnostic = nullptr);

} // namespace nyspec
