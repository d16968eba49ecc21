#pragma once

#include "nyspec/clustering.hpp"
#include "nyspec/nystrom.hpp"
#include "nyspec/sampling.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nyspec {

enum class ClusterMode { exact, nystrom };

/// How the Nystrom route produces the clustering embedding.
///  laplacian: degree-normalise the landmark and cross blocks (degrees
///             estimated from the blocks), extend, then map back with D^{-1/2}.
///  affinity:  cluster on the extended eigenvectors of S itself.
enum class EmbeddingKind { laplacian, affinity };

std::string to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(const std::string& text);

struct SpectralOptions {
  ClusterMode mode = ClusterMode::nystrom;
  SamplerKind sampler = SamplerKind::rs;
  /// >= 1 wraps the sampler in an ensemble of that many experts.
  int ensemble_p = 0;
  SamplerConfig sampling;
  KernelSpec spec;
  std::uint64_t seed = 0;
  bool row_normalize = true;
  EmbeddingKind embedding = EmbeddingKind::laplacian;
  KMeansOptions kmeans;
};

struct SpectralResult {
  ClusterAssignment assignment;
  SpectralEmbedding embedding;
  /// Landmarks of every retained expert (one entry without an ensemble).
  std::vector<LandmarkSet> landmarks;
  /// Models that produced the embedding (normalised blocks for the laplacian route).
  std::vector<NystromModel> models;
  std::vector<double> weights;
  std::optional<SpectrumDiagnostic> diagnostic;
  std::vector<std::string> warnings;
};

/// Degree-normalised Nystrom embedding of every point from one landmark set.
/// Returns generalized eigenvectors u (columns) with eigenvalues 1 - mu,
/// ascending, and fills `model` with the normalised-block fit.
SpectralEmbedding nystrom_laplacian_embedding(const FeatureMatrix& data, const LandmarkSet& landmarks, int k,
                                              const KernelSpec& spec, NystromModel* model = nullptr);

/// Exact route: full S, Laplacian pair, k smallest generalized eigenpairs.
SpectralEmbedding exact_embedding(const FeatureMatrix& data, int k, const KernelSpec& spec);

SpectralResult spectral_cluster(const FeatureMatrix& data, int k, const SpectralOptions& options);

/// Pipeline tag recorded on the assignment: "exact" or "nystrom/<sampler>".
std::string pipeline_tag(const SpectralOptions& options);

} // namespace nyspec
