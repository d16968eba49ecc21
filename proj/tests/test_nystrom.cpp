#include "catch_amalgamated.hpp"

#include "nyspec/error.hpp"
#include "nyspec/nystrom.hpp"
#include "nyspec/sampling.hpp"
#include "support.hpp"

#include <numeric>

using namespace nyspec;
using Catch::Approx;

namespace {

LandmarkSet indexed(std::vector<PointId> ids) {
  LandmarkSet l;
  l.indices = std::move(ids);
  l.sampler = "fixed";
  return l;
}

LandmarkSet every_point(Eigen::Index n) {
  std::vector<PointId> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), PointId{0});
  return indexed(std::move(ids));
}

// Points are multiples (positive and negative) of one direction.
FeatureMatrix rank_one_data() {
  const Vector dir{{0.3, -1.2, 2.0}};
  Matrix x(12, 3);
  for (int i = 0; i < 12; ++i)
    x.row(i) = (i % 3 == 0 ? -1.0 : 1.0) * (0.5 + i) * dir.transpose();
  return testsupport::make_data(x);
}

// Sum of squared Nystrom errors built from the textbook formula
// C W^+ C^T with an explicitly computed pseudo-inverse.
double oracle_error(const Matrix& s, const std::vector<PointId>& landmarks) {
  const auto m = static_cast<Eigen::Index>(landmarks.size());
  Matrix c(s.rows(), m), w(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    c.col(j) = s.col(landmarks[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < m; ++i)
      w(i, j) = s(landmarks[static_cast<std::size_t>(i)], landmarks[static_cast<std::size_t>(j)]);
  }
  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vector inv = svd.singularValues();
  const double cut = std::max(1e-10, 1e-12 * inv(0));
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    inv(i) = inv(i) > cut ? 1.0 / inv(i) : 0.0;
  const Matrix pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return (s - c * pinv * c.transpose()).norm();
}

} // namespace

TEST_CASE("rank cutoff", "[nystrom]") {
  CHECK(rank_cutoff(1.0) == 1e-10);
  CHECK(rank_cutoff(1e4) == 1e-8);
}

TEST_CASE("all points as landmarks reproduce S", "[nystrom]") {
  std::mt19937_64 gen(11);
  const auto data = testsupport::make_data(testsupport::uniform_matrix(15, 20, gen, 0, 1));
  const Matrix s = testsupport::oracle_similarity(data.points);
  const auto model = fit(data, every_point(15), 15, KernelSpec::cosine());

  const Vector spectrum = testsupport::descending_eigenvalues(s);
  CHECK((model.landmark_eigvals - spectrum).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((model.extended_eigvecs - model.landmark_eigvecs).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model.landmark_eigvecs.transpose() * model.landmark_eigvecs - Matrix::Identity(15, 15)).norm() < 1e-8);
  // Eigenvectors of S, column by column.
  for (int c = 0; c < 15; ++c)
    CHECK((s * model.extended_eigvecs.col(c) - spectrum(c) * model.extended_eigvecs.col(c)).norm() < 1e-10);

  const Matrix approx = reconstruct(model).values;
  CHECK(testsupport::relative_frobenius(approx, s) < 1e-8);
  CHECK(frobenius_error(data, model, KernelSpec::cosine()).value < 1e-8);
}

TEST_CASE("rank-one data is recovered from two landmarks", "[nystrom]") {
  const auto data = rank_one_data();
  const Matrix s = testsupport::oracle_similarity(data.points);
  const auto model = fit(data, indexed({1, 4}), 1, KernelSpec::cosine());
  CHECK(model.rank == 1);
  CHECK((reconstruct(model).values - s).norm() < 1e-8);
  CHECK(frobenius_error(data, model, KernelSpec::cosine()).value < 1e-8);
  CHECK_THROWS_AS(fit(data, indexed({1, 4}), 0, KernelSpec::cosine()), ConfigError);
  // Both landmarks span the same line, so rank 2 is not available.
  try {
    fit(data, indexed({1, 4}), 2, KernelSpec::cosine());
    FAIL("expected RankDeficientLandmarks");
  } catch (const RankDeficientLandmarks& e) {
    CHECK(e.available() == 1);
  }
}

TEST_CASE("landmark rows of the extension equal U_A", "[nystrom]") {
  const Matrix x{{1, 0.2}, {0.1, 1}, {-0.4, 0.7}, {0.8, 0.8}, {0.3, -1}, {-1, -0.2}};
  const auto data = testsupport::make_data(x);
  const std::vector<PointId> ids{4, 0, 2};
  const auto model = fit(data, indexed(ids), 2, KernelSpec::cosine());
  REQUIRE(model.extended_eigvecs.rows() == 6);
  REQUIRE(model.extended_eigvecs.cols() == 2);
  for (std::size_t i = 0; i < ids.size(); ++i)
    CHECK((model.extended_eigvecs.row(ids[i]) - model.landmark_eigvecs.row(static_cast<Eigen::Index>(i)))
              .cwiseAbs()
              .maxCoeff() < 1e-8);
  CHECK(model.landmark_eigvals(0) >= model.landmark_eigvals(1));
  CHECK((model.landmark_eigvecs.transpose() * model.landmark_eigvecs - Matrix::Identity(2, 2)).norm() < 1e-8);

  // Non-landmark rows follow B U_A / Lambda_A, written out by hand.
  const Matrix s = testsupport::oracle_similarity(x);
  for (PointId row : {1, 3, 5})
    for (int c = 0; c < 2; ++c) {
      double v = 0.0;
      for (std::size_t j = 0; j < ids.size(); ++j)
        v += s(row, ids[j]) * model.landmark_eigvecs(static_cast<Eigen::Index>(j), c);
      CHECK(model.extended_eigvecs(row, c) == Approx(v / model.landmark_eigvals(c)).margin(1e-12));
    }
}

TEST_CASE("virtual landmarks extend every row", "[nystrom]") {
  std::mt19937_64 gen(5);
  const auto data = testsupport::make_data(testsupport::uniform_matrix(30, 4, gen, 0, 1));
  LandmarkSet centroids;
  centroids.kind = LandmarkKind::virtual_points;
  centroids.coordinates = testsupport::uniform_matrix(5, 4, gen, 0, 1);
  const auto model = fit_full_rank(data, centroids, KernelSpec::cosine());
  REQUIRE(model.extended_eigvecs.rows() == 30);
  const Matrix b = cross_similarity(data.points, centroids.coordinates, KernelSpec::cosine());
  const Matrix expected = b * model.landmark_eigvecs * model.landmark_eigvals.cwiseInverse().asDiagonal();
  CHECK((model.extended_eigvecs - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("full-rank fit matches the pseudo-inverse formula", "[nystrom][property]") {
  std::mt19937_64 gen(2718);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<Eigen::Index>(8 + gen() % 40);
    const auto d = static_cast<Eigen::Index>(2 + gen() % 10);
    const auto data = testsupport::make_data(testsupport::uniform_matrix(n, d, gen, 0, 1));
    const Matrix s = testsupport::oracle_similarity(data.points);
    const int m = static_cast<int>(2 + gen() % static_cast<std::uint64_t>(n - 2));
    const auto l = random_sample(data, m, gen());
    const auto model = fit_full_rank(data, l, KernelSpec::cosine());
    const double err = frobenius_error(data, model, KernelSpec::cosine()).value;
    INFO("trial " << trial);
    CHECK(err == Approx(oracle_error(s, l.indices)).margin(1e-8));

    const Matrix approx = reconstruct(model).values;
    CHECK(approx == approx.transpose());
    CHECK(testsupport::descending_eigenvalues(approx).minCoeff() >= -1e-8);
    CHECK(frobenius_error_dense(data, approx, KernelSpec::cosine()).value == Approx(err).margin(1e-10));
  }
}

TEST_CASE("exact recovery on low-rank constructions", "[nystrom]") {
  const auto data = testsupport::one_hot_groups(3, 20);
  const Matrix s = testsupport::oracle_similarity(data.points);
  for (const std::vector<PointId>& ids : {std::vector<PointId>{0, 20, 40}, std::vector<PointId>{59, 3, 27, 28}}) {
    const auto model = fit(data, indexed(ids), 3, KernelSpec::cosine());
    CHECK(testsupport::relative_frobenius(reconstruct(model).values, s) <= 1e-8);
    CHECK(frobenius_error(data, model, KernelSpec::cosine()).relative() <= 1e-8);
  }
}

TEST_CASE("interlacing of principal submatrix spectra", "[nystrom][property]") {
  std::mt19937_64 gen(161);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(3 + gen() % 60);
    const auto d = static_cast<Eigen::Index>(1 + gen() % 10);
    const auto data = testsupport::make_data(testsupport::uniform_matrix(n, d, gen, 0, 1));
    const Vector lambda = testsupport::descending_eigenvalues(full_similarity(data, KernelSpec::cosine()).values);
    const int m = static_cast<int>(2 + gen() % static_cast<std::uint64_t>(n - 1));
    const auto l = random_sample(data, m, gen());
    const auto model = fit_full_rank(data, l, KernelSpec::cosine());
    INFO("trial " << trial << " n=" << n << " m=" << m);
    for (Eigen::Index i = 0; i < model.rank; ++i) {
      CHECK(model.landmark_eigvals(i) <= lambda(i) + 1e-10);
      CHECK(model.landmark_eigvals(i) >= lambda(i + (n - m)) - 1e-10);
    }
  }
}

TEST_CASE("error shrinks with more landmarks on average", "[nystrom]") {
  std::mt19937_64 gen(20);
  const auto data = testsupport::make_data(testsupport::uniform_matrix(20, 15, gen, 0, 1));
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    small += frobenius_error(data, fit_full_rank(data, random_sample(data, 4, seed), KernelSpec::cosine()),
                             KernelSpec::cosine())
                 .value;
    large += frobenius_error(data, fit_full_rank(data, random_sample(data, 12, seed), KernelSpec::cosine()),
                             KernelSpec::cosine())
                 .value;
  }
  CHECK(large <= small);
}

TEST_CASE("sampled Frobenius estimate", "[nystrom]") {
  std::mt19937_64 gen(21);
  const auto data = testsupport::make_data(testsupport::uniform_matrix(60, 6, gen, -1, 1));
  const auto model = fit_full_rank(data, random_sample(data, 5, 1), KernelSpec::cosine());
  const auto exact = frobenius_error(data, model, KernelSpec::cosine());
  const auto est = estimate_frobenius_error(data, model, KernelSpec::cosine(), 200000, 9);
  CHECK(est.pairs == 200000);
  CHECK(est.value == Approx(exact.value).epsilon(0.05));
  CHECK(est.reference == Approx(exact.reference).epsilon(0.05));
  CHECK(estimate_frobenius_error(data, model, KernelSpec::cosine(), 100, 3).value ==
        estimate_frobenius_error(data, model, KernelSpec::cosine(), 100, 3).value);
  CHECK_THROWS_AS(estimate_frobenius_error(data, model, KernelSpec::cosine(), 0, 3), ConfigError);
}

TEST_CASE("ensembles", "[nystrom]") {
  std::mt19937_64 gen(6);
  const auto data = testsupport::make_data(testsupport::uniform_matrix(40, 8, gen, 0, 1));
  const LandmarkSampler rs = [](const FeatureMatrix& d, std::uint64_t s) { return random_sample(d, 6, s); };

  SECTION("one expert is a single fit") {
    const auto ens = ensemble_fit(data, rs, 1, 3, KernelSpec::cosine(), 4);
    REQUIRE(ens.experts.size() == 1);
    CHECK(ens.weights == std::vector<double>{1.0});
    const auto single = fit(data, random_sample(data, 6, expert_seed(4, 0)), 3, KernelSpec::cosine());
    CHECK(ens.experts[0].extended_eigvecs == single.extended_eigvecs);
    CHECK(ensemble_reconstruct(ens) == reconstruct(single).values);
  }
  SECTION("rank-one data stays exact") {
    const auto r1 = rank_one_data();
    const LandmarkSampler pick = [](const FeatureMatrix& d, std::uint64_t s) { return random_sample(d, 3, s); };
    const auto ens = ensemble_fit(r1, pick, 3, 1, KernelSpec::cosine(), 8);
    CHECK(frobenius_error_dense(r1, ensemble_reconstruct(ens), KernelSpec::cosine()).value < 1e-8);
  }
  SECTION("reruns are identical") {
    const auto a = ensemble_fit(data, rs, 5, 3, KernelSpec::cosine(), 99);
    const auto b = ensemble_fit(data, rs, 5, 3, KernelSpec::cosine(), 99);
    CHECK(a.expert_seeds == b.expert_seeds);
    CHECK(a.weights == b.weights);
    CHECK(std::set<std::uint64_t>(a.expert_seeds.begin(), a.expert_seeds.end()).size() == 5);
    CHECK(std::accumulate(a.weights.begin(), a.weights.end(), 0.0) == Approx(1.0));
  }
  SECTION("rank-deficient experts are dropped") {
    const auto dup = testsupport::one_hot_groups(2, 10);
    const LandmarkSampler same_group = [](const FeatureMatrix&, std::uint64_t s) {
      return indexed(s % 2 ? std::vector<PointId>{0, 1} : std::vector<PointId>{0, 10});
    };
    // Only experts drawing {0, 10} can support rank 2.
    bool saw_drop = false;
    for (std::uint64_t seed = 0; seed < 10 && !saw_drop; ++seed) {
      try {
        const auto ens = ensemble_fit(dup, same_group, 4, 2, KernelSpec::cosine(), seed);
        saw_drop = !ens.warnings.empty();
        if (saw_drop)
          CHECK(std::accumulate(ens.weights.begin(), ens.weights.end(), 0.0) == Approx(1.0));
      } catch (const RankDeficientLandmarks&) {
      }
    }
    CHECK(saw_drop);
  }
  CHECK_THROWS_AS(ensemble_fit(data, rs, 0, 3, KernelSpec::cosine(), 0), ConfigError);
}

TEST_CASE("ensemble error never exceeds the worst expert", "[nystrom][property]") {
  std::mt19937_64 gen(404);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<Eigen::Index>(20 + gen() % 181);
    const auto data = testsupport::make_data(testsupport::uniform_matrix(n, 1 + gen() % 12, gen, 0, 1));
    const int m = static_cast<int>(2 + gen() % 10);
    const LandmarkSampler rs = [m](const FeatureMatrix& d, std::uint64_t s) { return random_sample(d, m, s); };
    for (int p : {2, 5, 10}) {
      const auto ens = ensemble_fit_full_rank(data, rs, p, KernelSpec::cosine(), gen());
      const double combined = frobenius_error_dense(data, ensemble_reconstruct(ens), KernelSpec::cosine()).value;
      double worst = 0.0;
      for (const auto& e : ens.experts)
        worst = std::max(worst, frobenius_error(data, e, KernelSpec::cosine()).value);
      INFO("trial " << trial << " p=" << p);
      CHECK(combined <= worst + 1e-12);
    }
  }
}

TEST_CASE("sign alignment and embedding average", "[nystrom]") {
  const Matrix v{{0.1, -0.9}, {-0.5, 0.2}, {0.3, 0.1}};
  const Matrix aligned = align_signs(v);
  CHECK(aligned.col(0) == -v.col(0));
  CHECK(aligned.col(1) == -v.col(1));
  const Matrix flipped = -v;
  CHECK(combine_embeddings({v, flipped}, {0.25, 0.75}) == aligned);
  CHECK_THROWS_AS(combine_embeddings({v}, {}), LengthMismatch);
}

TEST_CASE("block shapes are checked", "[nystrom]") {
  const Matrix a = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(fit_blocks(Matrix::Ones(2, 3), Matrix::Zero(1, 2), {}, 3, 1), LengthMismatch);
  CHECK_THROWS_AS(fit_blocks(a, Matrix::Zero(2, 3), {}, 2, 1), LengthMismatch);
  const auto ok = fit_blocks(a, Matrix::Zero(3, 2), {}, 3, 2);
  CHECK(ok.extended_eigvecs.rows() == 3);
  CHECK(ok.extended_eigvecs.isZero());
}
