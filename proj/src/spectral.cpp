#include "nyspec/spectral.hpp"

#include "nyspec/error.hpp"
#include "nyspec/rng.hpp"

#include <cmath>

namespace nyspec {

std::string to_string(EmbeddingKind kind) { return kind == EmbeddingKind::laplacian ? "laplacian" : "affinity"; }

EmbeddingKind parse_embedding_kind(const std::string& text) {
  if (text == "laplacian")
    return EmbeddingKind::laplacian;
  if (text == "affinity")
    return EmbeddingKind::affinity;
  throw ConfigError("unknown embedding '" + text + "'");
}

std::string pipeline_tag(const SpectralOptions& options) {
  if (options.mode == ClusterMode::exact)
    return "exact";
  std::string tag = "nystrom/";
  if (options.ensemble_p >= 1)
    tag += "ensemble-" + to_string(options.sampler) + "/p" + std::to_string(options.ensemble_p);
  else
    tag += to_string(options.sampler);
  return tag;
}

namespace {

constexpr std::uint64_t kmeans_stream = 0x4b4d45414e530001ULL;

// Symmetric pseudo-inverse with the Nystrom rank cutoff applied to |lambda|.
Matrix symmetric_pinv(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (a + a.transpose()));
  if (solver.info() != Eigen::Success)
    throw SolverFailure("pseudo-inverse: eigendecomposition failed");
  const Vector& values = solver.eigenvalues();
  const double cutoff = rank_cutoff(values.cwiseAbs().maxCoeff());
  Vector inv(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i)
    inv(i) = std::abs(values(i)) > cutoff ? 1.0 / values(i) : 0.0;
  return solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
}

SpectralEmbedding affinity_embedding(const FeatureMatrix& data, const LandmarkSet& landmarks, int k,
                                     const KernelSpec& spec, NystromModel* model) {
  NystromModel fitted = fit(data, landmarks, k, spec);
  SpectralEmbedding out;
  out.vectors = fitted.extended_eigvecs;
  out.eigenvalues = fitted.landmark_eigvals;
  out.source = EmbeddingSource::approximate;
  if (model)
    *model = std::move(fitted);
  return out;
}

} // namespace

SpectralEmbedding nystrom_laplacian_embedding(const FeatureMatrix& data, const LandmarkSet& landmarks, int k,
                                              const KernelSpec& spec, NystromModel* model) {
  landmarks.validate(data);
  const Eigen::Index n = data.size();
  const Matrix lpts = landmarks.points(data);
  const Matrix a = cross_similarity(lpts, lpts, spec);

  std::vector<PointId> others;
  Matrix b;
  if (landmarks.is_virtual()) {
    b = cross_similarity(data.points, lpts, spec);
  } else {
    std::vector<char> is_landmark(static_cast<std::size_t>(n), 0);
    for (PointId id : landmarks.indices)
      is_landmark[static_cast<std::size_t>(id)] = 1;
    for (PointId i = 0; i < n; ++i)
      if (!is_landmark[static_cast<std::size_t>(i)])
        others.push_back(i);
    b = similarity_block(others, landmarks.indices, data, spec).values;
  }

  // Degree estimates: landmarks from the exact block sums, other points
  // from the Nystrom-completed rows B 1 + B A^+ B^T 1.
  const Vector col_sums = b.cols() > 0 ? Vector(b.colwise().sum().transpose()) : Vector::Zero(a.rows());
  Vector landmark_deg = col_sums;
  Vector other_deg = b * (symmetric_pinv(a) * col_sums);
  if (!landmarks.is_virtual()) {
    landmark_deg += a.rowwise().sum();
    if (b.rows() > 0)
      other_deg += b.rowwise().sum();
  }
  Vector joined(landmark_deg.size() + other_deg.size());
  joined << landmark_deg, other_deg;
  joined = regularized_degrees(joined);
  const Vector l_scale = joined.head(landmark_deg.size()).cwiseSqrt().cwiseInverse();
  const Vector o_scale = joined.tail(other_deg.size()).cwiseSqrt().cwiseInverse();

  const Matrix a_hat = l_scale.asDiagonal() * a * l_scale.asDiagonal();
  const Matrix b_hat = o_scale.asDiagonal() * b * l_scale.asDiagonal();
  const std::span<const PointId> rows =
      landmarks.is_virtual() ? std::span<const PointId>{} : std::span<const PointId>(landmarks.indices);
  NystromModel fitted = fit_blocks(a_hat, b_hat, rows, n, k);
  fitted.landmarks = landmarks;
  fitted.spec = spec;

  // Per-point D^{-1/2}, in dataset order.
  Vector point_scale(n);
  if (landmarks.is_virtual()) {
    point_scale = o_scale;
  } else {
    for (std::size_t i = 0; i < landmarks.indices.size(); ++i)
      point_scale(landmarks.indices[i]) = l_scale(static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < others.size(); ++i)
      point_scale(others[i]) = o_scale(static_cast<Eigen::Index>(i));
  }

  SpectralEmbedding out;
  out.vectors = point_scale.asDiagonal() * fitted.extended_eigvecs;
  out.eigenvalues = (1.0 - fitted.landmark_eigvals.array()).matrix();
  out.source = EmbeddingSource::approximate;
  if (model)
    *model = std::move(fitted);
  return out;
}

SpectralEmbedding exact_embedding(const FeatureMatrix& data, int k, const KernelSpec& spec) {
  const Matrix s = full_similarity(data, spec).values;
  const LaplacianPair lp = laplacian_pair(s);
  SpectralEmbedding out = generalized_eigen(lp.laplacian, lp.degrees, k, EigenOrder::ascending);
  out.source = EmbeddingSource::exact;
  return out;
}

SpectralResult spectral_cluster(const FeatureMatrix& data, int k, const SpectralOptions& options) {
  const Eigen::Index n = data.size();
  if (k < 2 || k > n)
    throw ConfigError("spectral_cluster: k must lie in 2..n (k=" + std::to_string(k) + ")");
  options.spec.validate();

  SpectralResult result;
  if (options.mode == ClusterMode::exact) {
    result.embedding = exact_embedding(data, k, options.spec);
  } else {
    SamplerConfig cfg = options.sampling;
    cfg.seed = options.seed;
    cfg.validate(n);
    if (cfg.m < k)
      throw ConfigError("spectral_cluster: landmark count m=" + std::to_string(cfg.m) + " is below k=" +
                        std::to_string(k));

    auto embed = [&](const LandmarkSet& landmarks, NystromModel* model) {
      return options.embedding == EmbeddingKind::laplacian
                 ? nystrom_laplacian_embedding(data, landmarks, k, options.spec, model)
                 : affinity_embedding(data, landmarks, k, options.spec, model);
    };

    if (options.ensemble_p >= 1) {
      std::vector<Matrix> parts;
      Vector eigenvalues = Vector::Zero(k);
      for (int e = 0; e < options.ensemble_p; ++e) {
        SamplerConfig expert = cfg;
        expert.seed = expert_seed(options.seed, e);
        LandmarkSet landmarks = sample_landmarks(options.sampler, data, expert, options.spec);
        NystromModel model;
        try {
          SpectralEmbedding emb = embed(landmarks, &model);
          parts.push_back(std::move(emb.vectors));
          eigenvalues += emb.eigenvalues;
          result.landmarks.push_back(std::move(landmarks));
          result.models.push_back(std::move(model));
        } catch (const RankDeficientLandmarks& err) {
          result.warnings.push_back("expert " + std::to_string(e) + " dropped: " + err.what());
        }
      }
      if (parts.empty())
        throw RankDeficientLandmarks("ensemble: every expert was rank deficient", 0);
      result.weights.assign(parts.size(), 1.0 / static_cast<double>(parts.size()));
      result.embedding.vectors = combine_embeddings(parts, result.weights);
      result.embedding.eigenvalues = eigenvalues / static_cast<double>(parts.size());
      result.embedding.source = EmbeddingSource::approximate;
    } else {
      SpectrumDiagnostic diag;
      LandmarkSet landmarks = sample_landmarks(options.sampler, data, cfg, options.spec, &diag);
      if (options.sampler == SamplerKind::cms3_tuned)
        result.diagnostic = diag;
      NystromModel model;
      result.embedding = embed(landmarks, &model);
      result.landmarks.push_back(std::move(landmarks));
      result.models.push_back(std::move(model));
      result.weights = {1.0};
    }
  }

  const Matrix z = options.row_normalize ? normalize_rows(result.embedding.vectors) : result.embedding.vectors;
  result.assignment = kmeans(z, k, derive_seed(options.seed, kmeans_stream), options.kmeans);
  result.assignment.seed = options.seed;
  result.assignment.pipeline = pipeline_tag(options);
  return result;
}

} // namespace nyspec
