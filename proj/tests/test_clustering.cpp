#include "catch_amalgamated.hpp"

#include "nyspec/clustering.hpp"
#include "nyspec/error.hpp"
#include "nyspec/eval.hpp"
#include "nyspec/spectral.hpp"
#include "support.hpp"

#include <numeric>
#include <set>

using namespace nyspec;
using Catch::Approx;

namespace {

Matrix random_psd(Eigen::Index n, std::mt19937_64& gen) {
  const Matrix g = testsupport::uniform_matrix(n, n + 2, gen, 0, 1);
  return g * g.transpose() / static_cast<double>(n);
}

// Largest principal angle between the column spans of a and b.
double max_principal_angle(const Matrix& a, const Matrix& b) {
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
  const Vector sv = Eigen::JacobiSVD<Matrix>(qa.transpose() * qb).singularValues();
  return std::acos(std::min(1.0, sv.minCoeff()));
}

SpectralOptions nystrom_options(SamplerKind sampler, int m, std::uint64_t seed) {
  SpectralOptions o;
  o.sampler = sampler;
  o.sampling.m = m;
  o.seed = seed;
  return o;
}

} // namespace

TEST_CASE("Laplacian pairs", "[clustering]") {
  const auto id = laplacian_pair(Matrix::Identity(3, 3));
  CHECK(id.degrees == Vector::Ones(3));
  CHECK(id.laplacian.isZero(0.0));

  const auto two = laplacian_pair(Matrix::Ones(2, 2));
  CHECK(two.degrees == Vector::Constant(2, 2.0));
  CHECK(two.laplacian == (Matrix(2, 2) << 1, -1, -1, 1).finished());

  std::mt19937_64 gen(3);
  Matrix s = testsupport::uniform_matrix(5, 5, gen);
  s = (s + s.transpose()).eval();
  CHECK(laplacian_pair(s).laplacian.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(laplacian_pair(Matrix::Zero(2, 3)), LengthMismatch);
}

TEST_CASE("degree regularisation", "[clustering]") {
  const Vector d{{4.0, 0.0, 2.0}};
  const Vector r = regularized_degrees(d);
  CHECK(r(0) == 4.0);
  CHECK(r(1) == 4e-12);
  CHECK(regularized_degrees(Vector::Zero(2)) == Vector::Constant(2, 1e-12));
}

TEST_CASE("generalized eigenproblem", "[clustering]") {
  SECTION("null operator") {
    const auto e = generalized_eigen(Matrix::Zero(4, 4), Vector::Ones(4), 4, EigenOrder::ascending);
    CHECK(e.eigenvalues.isZero(0.0));
    CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(4, 4)).norm() < 1e-12);
  }
  SECTION("two disconnected components") {
    Matrix s = Matrix::Zero(7, 7);
    s.topLeftCorner(3, 3).setConstant(0.8);
    s.bottomRightCorner(4, 4).setConstant(0.5);
    s.diagonal().setOnes();
    const auto lp = laplacian_pair(s);
    const Vector oracle = testsupport::oracle_generalized_eigenvalues(lp.laplacian, lp.degrees);
    const auto e = generalized_eigen(lp.laplacian, lp.degrees, 3, EigenOrder::ascending);
    CHECK(std::abs(e.eigenvalues(0)) < 1e-12);
    CHECK(std::abs(e.eigenvalues(1)) < 1e-12);
    CHECK(e.eigenvalues(2) == Approx(oracle(2)).margin(1e-10));
    Matrix indicators = Matrix::Zero(7, 2);
    indicators.col(0).head(3).setOnes();
    indicators.col(1).tail(4).setOnes();
    CHECK(max_principal_angle(e.vectors.leftCols(2), indicators) < 1e-6);
  }
  SECTION("property: matches a dense two-matrix solver") {
    std::mt19937_64 gen(10);
    for (int trial = 0; trial < 30; ++trial) {
      const Matrix s = random_psd(10, gen);
      const auto lp = laplacian_pair(s);
      const Vector oracle = testsupport::oracle_generalized_eigenvalues(lp.laplacian, lp.degrees);
      const auto asc = generalized_eigen(lp.laplacian, lp.degrees, 10, EigenOrder::ascending);
      const auto desc = generalized_eigen(lp.laplacian, lp.degrees, 10, EigenOrder::descending);
      INFO("trial " << trial);
      CHECK((asc.eigenvalues - oracle).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((desc.eigenvalues - oracle.reverse()).cwiseAbs().maxCoeff() < 1e-8);
      const double pnorm = lp.laplacian.norm();
      for (int c = 0; c < 10; ++c) {
        const Vector u = asc.vectors.col(c);
        const Vector r = lp.laplacian * u - asc.eigenvalues(c) * lp.degrees.asDiagonal() * u;
        CHECK(r.norm() / (pnorm * u.norm()) <= 1e-6);
      }
      // D-orthonormal columns
      const Matrix gram = asc.vectors.transpose() * lp.degrees.asDiagonal() * asc.vectors;
      CHECK((gram - Matrix::Identity(10, 10)).norm() < 1e-8);
    }
  }
  CHECK_THROWS_AS(generalized_eigen(Matrix::Zero(3, 3), Vector::Ones(3), 4, EigenOrder::ascending), ConfigError);
}

TEST_CASE("k-means", "[clustering]") {
  SECTION("k = n gives singletons") {
    std::mt19937_64 gen(1);
    const Matrix x = testsupport::uniform_matrix(8, 3, gen);
    const auto km = kmeans(x, 8, 4);
    CHECK(km.inertia == 0.0);
    CHECK(km.distinct_labels() == 8);
  }
  SECTION("separated blobs for every seed") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto data = testsupport::gaussian_blobs(60, 2, 5.0, 50 + seed);
      const auto km = kmeans(data.points, 2, seed);
      CHECK(testsupport::oracle_accuracy(km.labels, *data.labels) == 1.0);
    }
  }
  SECTION("property: inertia trace non-increasing, centroids are means") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 40; ++trial) {
      const auto n = static_cast<Eigen::Index>(10 + gen() % 200);
      const Matrix x = testsupport::uniform_matrix(n, 1 + gen() % 5, gen);
      const int k = static_cast<int>(1 + gen() % 8);
      const auto km = kmeans(x, k, gen());
      INFO("trial " << trial);
      REQUIRE(km.iterations <= 300);
      REQUIRE(km.iterations == static_cast<int>(km.inertia_trace.size()));
      for (std::size_t i = 1; i < km.inertia_trace.size(); ++i)
        CHECK(km.inertia_trace[i] <= km.inertia_trace[i - 1] * (1 + 1e-12));
      CHECK(km.inertia <= km.inertia_trace.back() * (1 + 1e-12));
      CHECK(km.distinct_labels() == k);
      for (int c = 0; c < k; ++c) {
        Vector mean = Vector::Zero(x.cols());
        int members = 0;
        for (Eigen::Index i = 0; i < n; ++i)
          if (km.labels[static_cast<std::size_t>(i)] == c) {
            mean += x.row(i).transpose();
            ++members;
          }
        CHECK((mean / members - km.centroids.row(c).transpose()).norm() < 1e-12);
      }
    }
  }
  SECTION("relabelling leaves inertia unchanged") {
    std::mt19937_64 gen(2);
    const Matrix x = testsupport::uniform_matrix(50, 2, gen);
    const auto km = kmeans(x, 4, 1);
    const std::vector<int> perm{2, 0, 3, 1};
    double relabelled = 0.0;
    for (Eigen::Index i = 0; i < 50; ++i) {
      const int c = km.labels[static_cast<std::size_t>(i)];
      Matrix permuted(4, 2);
      for (int j = 0; j < 4; ++j)
        permuted.row(perm[static_cast<std::size_t>(j)]) = km.centroids.row(j);
      relabelled += (x.row(i) - permuted.row(perm[static_cast<std::size_t>(c)])).squaredNorm();
    }
    CHECK(relabelled == Approx(km.inertia).epsilon(1e-12));
  }
  SECTION("determinism and errors") {
    std::mt19937_64 gen(9);
    const Matrix x = testsupport::uniform_matrix(30, 2, gen);
    CHECK(kmeans(x, 3, 5).labels == kmeans(x, 3, 5).labels);
    const Matrix dup = Matrix::Ones(5, 2);
    CHECK_THROWS_AS(kmeans(dup, 2, 0), DegenerateClustering);
    CHECK_THROWS_AS(kmeans(x, 0, 0), ConfigError);
    CHECK_THROWS_AS(kmeans(x, 31, 0), ConfigError);
    CHECK(kmeans(x, 3, 5, KMeansOptions{1, 1e-6}).iterations == 1);
  }
  CHECK(distinct_row_count((Matrix(4, 2) << 1, 2, 1, 2, 0, 2, 1, 2).finished()) == 2);
  CHECK(normalize_rows((Matrix(2, 2) << 3, 4, 0, 0).finished()) == (Matrix(2, 2) << 0.6, 0.8, 0, 0).finished());
}

TEST_CASE("spectral clustering of orthogonal groups", "[clustering]") {
  const auto data = testsupport::one_hot_groups(3, 10);
  SECTION("exact mode") {
    SpectralOptions o;
    o.mode = ClusterMode::exact;
    const auto r = spectral_cluster(data, 3, o);
    CHECK(clustering_accuracy(r.assignment, *data.labels) == 1.0);
    CHECK(r.assignment.pipeline == "exact");
  }
  SECTION("six random landmarks") {
    int spanning = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto o = nystrom_options(SamplerKind::rs, 6, seed);
      const auto l = random_sample(data, 6, seed);
      std::set<int> groups;
      for (PointId id : l.indices)
        groups.insert((*data.labels)[static_cast<std::size_t>(id)]);
      INFO("seed " << seed);
      if (groups.size() == 3) {
        ++spanning;
        const auto r = spectral_cluster(data, 3, o);
        CHECK(r.landmarks.front().indices == l.indices);
        CHECK(clustering_accuracy(r.assignment, *data.labels) == 1.0);
      } else {
        // Landmarks from two groups cannot carry a rank-3 embedding.
        CHECK_THROWS_AS(spectral_cluster(data, 3, o), RankDeficientLandmarks);
      }
    }
    CHECK(spanning >= 5);
  }
}

TEST_CASE("n = k puts every point in its own cluster", "[clustering]") {
  std::mt19937_64 gen(4);
  auto data = testsupport::make_data(testsupport::uniform_matrix(4, 6, gen, 0, 1), {0, 1, 2, 3});
  SpectralOptions o;
  o.mode = ClusterMode::exact;
  const auto r = spectral_cluster(data, 4, o);
  CHECK(r.assignment.distinct_labels() == 4);
  CHECK(clustering_accuracy(r.assignment, *data.labels) == 1.0);
}

TEST_CASE("all-landmark Nystrom spans the exact embedding", "[clustering][property]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = testsupport::gaussian_blobs(24 + static_cast<int>(seed) * 2, 3, 4.0, seed);
    const Eigen::Index n = data.size();
    std::vector<PointId> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), PointId{0});
    LandmarkSet every;
    every.indices = all;
    const auto exact = exact_embedding(data, 3, KernelSpec::cosine());
    const auto approx = nystrom_laplacian_embedding(data, every, 3, KernelSpec::cosine());
    INFO("seed " << seed);
    CHECK(max_principal_angle(exact.vectors, approx.vectors) < 1e-4);
    CHECK((exact.eigenvalues - approx.eigenvalues).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("Nystrom pipeline variants", "[clustering]") {
  const auto data = testsupport::gaussian_blobs(150, 3, 6.0, 77);
  for (SamplerKind kind : {SamplerKind::rs, SamplerKind::ks, SamplerKind::ss, SamplerKind::ms3, SamplerKind::cms3,
                           SamplerKind::cms3_tuned}) {
    auto o = nystrom_options(kind, 15, 3);
    const auto r = spectral_cluster(data, 3, o);
    INFO(to_string(kind));
    CHECK(r.assignment.pipeline == "nystrom/" + to_string(kind));
    CHECK(r.assignment.labels.size() == 150);
    CHECK(r.diagnostic.has_value() == (kind == SamplerKind::cms3_tuned));
    CHECK(clustering_accuracy(r.assignment, *data.labels) >= 0.9);
    const auto again = spectral_cluster(data, 3, o);
    CHECK(again.assignment.labels == r.assignment.labels);

    o.embedding = EmbeddingKind::affinity;
    CHECK(spectral_cluster(data, 3, o).assignment.labels.size() == 150);
  }

  auto ens = nystrom_options(SamplerKind::rs, 15, 5);
  ens.ensemble_p = 4;
  const auto r = spectral_cluster(data, 3, ens);
  CHECK(r.assignment.pipeline == "nystrom/ensemble-rs/p4");
  CHECK(r.models.size() == 4);
  CHECK(r.weights == std::vector<double>(4, 0.25));
  CHECK(clustering_accuracy(r.assignment, *data.labels) >= 0.9);

  auto too_few = nystrom_options(SamplerKind::rs, 2, 0);
  CHECK_THROWS_AS(spectral_cluster(data, 3, too_few), ConfigError);
  CHECK_THROWS_AS(spectral_cluster(data, 1, ens), ConfigError);
  CHECK(parse_embedding_kind("affinity") == EmbeddingKind::affinity);
  CHECK_THROWS_AS(parse_embedding_kind("raw"), ConfigError);
}
