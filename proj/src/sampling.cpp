#include "nyspec/sampling.hpp"

#include "nyspec/clustering.hpp"
#include "nyspec/error.hpp"
#include "nyspec/rng.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace nyspec {

Eigen::Index LandmarkSet::size() const noexcept {
  return is_virtual() ? coordinates.rows() : static_cast<Eigen::Index>(indices.size());
}

Matrix LandmarkSet::points(const FeatureMatrix& data) const {
  if (is_virtual())
    return coordinates;
  Matrix out(static_cast<Eigen::Index>(indices.size()), data.dim());
  for (std::size_t i = 0; i < indices.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = data.points.row(indices[i]);
  return out;
}

void LandmarkSet::validate(const FeatureMatrix& data) const {
  const Eigen::Index m = size();
  if (m < 2 || m > data.size())
    throw InvalidLandmarkCount("landmark count must lie in 2..n");
  if (is_virtual()) {
    if (coordinates.cols() != data.dim() || !coordinates.allFinite())
      throw ConfigError("virtual landmarks must be finite with the dataset's dimension");
    return;
  }
  std::set<PointId> seen;
  for (PointId id : indices) {
    if (id < 0 || id >= data.size())
      throw ConfigError("landmark index out of range");
    if (!seen.insert(id).second)
      throw ConfigError("landmark indices must be distinct");
  }
}

int SamplerConfig::resolved_r(Eigen::Index n) const {
  if (r > 0)
    return r;
  return static_cast<int>(std::min<Eigen::Index>(2 * static_cast<Eigen::Index>(m), n));
}

void SamplerConfig::validate(Eigen::Index n) const {
  if (m < 2 || m > n)
    throw InvalidLandmarkCount("m must lie in 2..n (m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")");
  const int rr = resolved_r(n);
  if (rr < m || rr > n)
    throw ConfigError("r must satisfy m <= r <= n (r=" + std::to_string(rr) + ")");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ConfigError("gamma must lie in (0, 1]");
  const double sm = resolved_sm_fraction();
  if (!(sm > 0.0 && sm <= 1.0))
    throw ConfigError("sm_fraction must lie in (0, 1]");
}

std::size_t candidate_pool_size(double gamma, std::size_t remaining) {
  // The small slack keeps exact products such as 0.1 * 30 from rounding up.
  const double raw = std::ceil(gamma * static_cast<double>(remaining) - 1e-9);
  const auto size = raw < 1.0 ? std::size_t{1} : static_cast<std::size_t>(raw);
  return std::min(size, remaining);
}

namespace {

void check_count(const FeatureMatrix& data, int m) {
  if (m < 2 || m > data.size())
    throw InvalidLandmarkCount("landmark count must lie in 2..n (m=" + std::to_string(m) +
                               ", n=" + std::to_string(data.size()) + ")");
}

std::vector<PointId> all_ids(Eigen::Index n) {
  std::vector<PointId> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), PointId{0});
  return ids;
}

double score_term(double sim, GreedyScore score) { return score == GreedyScore::squared_similarity ? sim * sim : sim; }

// Shared control flow of SS and MS3.
LandmarkSet greedy_sample(const FeatureMatrix& data, int m, double gamma, const KernelSpec& spec,
                          std::uint64_t seed, GreedyScore score, bool strict_bound, const char* tag) {
  check_count(data, m);
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ConfigError("gamma must lie in (0, 1]");
  const Eigen::Index n = data.size();
  const Matrix cols = data.points.transpose();
  auto point = [&](PointId i) {
    return std::span<const double>(cols.col(i).data(), static_cast<std::size_t>(cols.rows()));
  };

  Rng rng(seed);
  const auto ids = all_ids(n);
  std::vector<PointId> selected = sample_without_replacement(ids, 2, rng);
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  for (PointId s : selected)
    taken[static_cast<std::size_t>(s)] = 1;

  // full[x]    = sum over all selected landmarks, in selection order
  // lagged[x]  = same sum without the most recent landmark
  std::vector<double> full(static_cast<std::size_t>(n), 0.0);
  std::vector<double> lagged(static_cast<std::size_t>(n), 0.0);
  auto absorb = [&](PointId landmark) {
    for (PointId x = 0; x < n; ++x) {
      if (taken[static_cast<std::size_t>(x)])
        continue;
      lagged[static_cast<std::size_t>(x)] = full[static_cast<std::size_t>(x)];
      full[static_cast<std::size_t>(x)] += score_term(kernel_value(point(x), point(landmark), spec), score);
    }
  };
  absorb(selected[0]);
  absorb(selected[1]);

  std::vector<PointId> remaining;
  remaining.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(selected.size()) < m) {
    remaining.clear();
    for (PointId x = 0; x < n; ++x)
      if (!taken[static_cast<std::size_t>(x)])
        remaining.push_back(x);
    const auto pool = sample_without_replacement(remaining, candidate_pool_size(gamma, remaining.size()), rng);
    if (pool.empty())
      throw EmptyCandidatePool("greedy sampler: empty candidate pool");

    const auto& scores = strict_bound ? lagged : full;
    PointId best = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (PointId x : pool) {
      const double s = scores[static_cast<std::size_t>(x)];
      if (s < best_score || (s == best_score && x < best)) {
        best_score = s;
        best = x;
      }
    }
    assert(best >= 0);
    selected.push_back(best);
    taken[static_cast<std::size_t>(best)] = 1;
    absorb(best);
  }

  LandmarkSet out;
  out.kind = LandmarkKind::indices;
  out.indices = std::move(selected);
  out.sampler = tag;
  out.seed = seed;
  return out;
}

// Independent stream for the switch subsample so that the branch taken
// afterwards sees exactly the stream a direct call would.
constexpr std::uint64_t switch_stream = 0x5357495443480001ULL;

} // namespace

GreedyChoice greedy_argmin(const FeatureMatrix& data, std::span<const PointId> selected,
                           std::span<const PointId> pool, const KernelSpec& spec, GreedyScore score) {
  if (pool.empty())
    throw EmptyCandidatePool("greedy_argmin: empty candidate pool");
  GreedyChoice best{-1, std::numeric_limits<double>::infinity()};
  for (PointId x : pool) {
    double s = 0.0;
    for (PointId l : selected)
      s += score_term(kernel_value(Vector(data.points.row(x)), Vector(data.points.row(l)), spec), score);
    if (s < best.score || (s == best.score && x < best.index))
      best = {x, s};
  }
  return best;
}

LandmarkSet random_sample(const FeatureMatrix& data, int m, std::uint64_t seed) {
  check_count(data, m);
  Rng rng(seed);
  LandmarkSet out;
  out.indices = sample_without_replacement(all_ids(data.size()), static_cast<std::size_t>(m), rng);
  out.sampler = "rs";
  out.seed = seed;
  return out;
}

LandmarkSet kmeans_sample(const FeatureMatrix& data, int m, std::uint64_t seed) {
  check_count(data, m);
  const ClusterAssignment km = kmeans(data.points, m, seed);
  const Eigen::Index n = data.size();
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::vector<std::pair<double, PointId>> dist(static_cast<std::size_t>(n));

  LandmarkSet out;
  out.sampler = "ks";
  out.seed = seed;
  for (Eigen::Index c = 0; c < m; ++c) {
    for (PointId i = 0; i < n; ++i)
      dist[static_cast<std::size_t>(i)] = {(data.points.row(i) - km.centroids.row(c)).squaredNorm(), i};
    std::sort(dist.begin(), dist.end());
    for (const auto& [d, i] : dist) {
      if (!used[static_cast<std::size_t>(i)]) {
        used[static_cast<std::size_t>(i)] = 1;
        out.indices.push_back(i);
        break;
      }
    }
  }
  return out;
}

LandmarkSet min_similarity_sample(const FeatureMatrix& data, int m, double gamma, const KernelSpec& spec,
                                  std::uint64_t seed, bool strict_alg1_bound) {
  return greedy_sample(data, m, gamma, spec, seed, GreedyScore::similarity, strict_alg1_bound, "ss");
}

LandmarkSet ms3_sample(const FeatureMatrix& data, int m, double gamma, const KernelSpec& spec,
                       std::uint64_t seed, bool strict_alg1_bound) {
  return greedy_sample(data, m, gamma, spec, seed, GreedyScore::squared_similarity, strict_alg1_bound, "ms3");
}

LandmarkSet cms3_sample(const FeatureMatrix& data, const SamplerConfig& cfg, const KernelSpec& spec) {
  cfg.validate(data.size());
  const int r = cfg.resolved_r(data.size());
  const LandmarkSet pre = ms3_sample(data, r, cfg.gamma, spec, cfg.seed, cfg.strict_alg1_bound);
  const Matrix pre_points = pre.points(data);
  const ClusterAssignment km = kmeans(pre_points, cfg.m, cfg.seed);

  LandmarkSet out;
  out.kind = LandmarkKind::virtual_points;
  out.coordinates = km.centroids;
  out.sampler = "cms3";
  out.seed = cfg.seed;
  out.support = pre.indices;
  out.support_cluster = km.labels;
  return out;
}

SpectrumDiagnostic spectrum_switch(const FeatureMatrix& data, const SamplerConfig& cfg, const KernelSpec& spec) {
  const Eigen::Index n = data.size();
  const double frac = cfg.resolved_sm_fraction();
  if (!(frac > 0.0 && frac <= 1.0))
    throw ConfigError("sm_fraction must lie in (0, 1]");
  const auto size = std::max<std::size_t>(3, candidate_pool_size(frac, static_cast<std::size_t>(n)));
  if (size > static_cast<std::size_t>(n))
    throw InvalidLandmarkCount("spectrum_switch: subsample larger than the dataset");

  Rng rng(derive_seed(cfg.seed, switch_stream));
  SpectrumDiagnostic out;
  out.subsample = sample_without_replacement(all_ids(n), size, rng);
  const Matrix s = similarity_block(out.subsample, out.subsample, data, spec).values;
  const LaplacianPair lp = laplacian_pair(s);
  const int count = static_cast<int>(size);
  out.eigenvalues = generalized_eigen(lp.laplacian, lp.degrees, count, EigenOrder::descending).eigenvalues;
  out.lambda2 = out.eigenvalues(1);
  out.tail_term = static_cast<double>(count) * out.eigenvalues(count - 1);
  out.use_cms3 = out.tail_term >= out.lambda2;

  Eigen::SelfAdjointEigenSolver<Matrix> sym(s, Eigen::EigenvaluesOnly);
  out.similarity_eigenvalues = sym.eigenvalues().reverse();
  out.similarity_lambda2 = out.similarity_eigenvalues(1);
  out.similarity_tail_term = static_cast<double>(count) * out.similarity_eigenvalues(count - 1);
  out.similarity_use_cms3 = out.similarity_tail_term >= out.similarity_lambda2;
  return out;
}

LandmarkSet cms3_tuned_sample(const FeatureMatrix& data, const SamplerConfig& cfg, const KernelSpec& spec,
                              SpectrumDiagnostic* diagnostic) {
  cfg.validate(data.size());
  const SpectrumDiagnostic diag = spectrum_switch(data, cfg, spec);
  LandmarkSet out = diag.use_cms3 ? cms3_sample(data, cfg, spec)
                                  : ms3_sample(data, cfg.m, cfg.gamma, spec, cfg.seed, cfg.strict_alg1_bound);
  out.sampler = diag.use_cms3 ? "cms3-tuned/cms3" : "cms3-tuned/ms3";
  if (diagnostic)
    *diagnostic = diag;
  return out;
}

std::string to_string(SamplerKind kind) {
  switch (kind) {
  case SamplerKind::rs:
    return "rs";
  case SamplerKind::ks:
    return "ks";
  case SamplerKind::ss:
    return "ss";
  case SamplerKind::ms3:
    return "ms3";
  case SamplerKind::cms3:
    return "cms3";
  case SamplerKind::cms3_tuned:
    return "cms3-tuned";
  }
  return "?";
}

SamplerKind parse_sampler_kind(const std::string& text) {
  for (SamplerKind k : {SamplerKind::rs, SamplerKind::ks, SamplerKind::ss, SamplerKind::ms3, SamplerKind::cms3,
                        SamplerKind::cms3_tuned})
    if (to_string(k) == text)
      return k;
  throw ConfigError("unknown sampler '" + text + "'");
}

LandmarkSet sample_landmarks(SamplerKind kind, const FeatureMatrix& data, const SamplerConfig& cfg,
                             const KernelSpec& spec, SpectrumDiagnostic* diagnostic) {
  switch (kind) {
  case SamplerKind::rs:
    return random_sample(data, cfg.m, cfg.seed);
  case SamplerKind::ks:
    return kmeans_sample(data, cfg.m, cfg.seed);
  case SamplerKind::ss:
    return min_similarity_sample(data, cfg.m, cfg.gamma, spec, cfg.seed, cfg.strict_alg1_bound);
  case SamplerKind::ms3:
    return ms3_sample(data, cfg.m, cfg.gamma, spec, cfg.seed, cfg.strict_alg1_bound);
  case SamplerKind::cms3:
    return cms3_sample(data, cfg, spec);
  case SamplerKind::cms3_tuned:
    return cms3_tuned_sample(data, cfg, spec, diagnostic);
  }
  throw ConfigError("unknown sampler");
}

} // namespace nyspec
