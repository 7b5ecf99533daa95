#include <doctest.h>

#include <cmath>
#include <random>

#include "dispca/clustering.hpp"
#include "dispca/errors.hpp"
#include "dispca/linalg.hpp"
#include "dispca/protocol.hpp"
#include "dispca/rng.hpp"
#include "dispca/sketching.hpp"

using namespace dispca;
using clustering::KmeansInit;
using linalg::Subspace;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()),
           static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// n points around k fixed well-separated locations.
Matrix mixture(Index n, Index d, Index k, double noise, std::uint64_t seed) {
  Matrix means = 10.0 * sketching::gaussian_matrix(k, d, mix_seed(seed, 1));
  Matrix out(n, d);
  auto rng = make_rng(mix_seed(seed, 2));
  std::uniform_int_distribution<Index> comp(0, k - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    const Index c = comp(rng);
    for (Index j = 0; j < d; ++j) out(i, j) = means(c, j) + noise * normal(rng);
  }
  return out;
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("kmeans_cost basics") {
  Matrix p = from_rows({{0, 0}, {0, 2}, {10, 0}, {10, 2}});
  CHECK(clustering::kmeans_cost(p, p) == 0.0);

  // k = 1: the mean is optimal and the cost is the total variance.
  Matrix mean = from_rows({{5, 1}});
  double variance = 0.0;
  for (Index i = 0; i < 4; ++i) variance += (p.row(i) - mean.row(0)).squaredNorm();
  CHECK(clustering::kmeans_cost(p, mean) == doctest::Approx(variance));

  // Four unit distances, enumerated.
  Matrix centers = from_rows({{0, 1}, {10, 1}});
  CHECK(clustering::kmeans_cost(p, centers) == doctest::Approx(4.0));

  CHECK_THROWS_AS(clustering::kmeans_cost(p, Matrix(0, 2)), std::invalid_argument);
}

TEST_CASE("assignment ties break toward the lowest index") {
  Matrix p = from_rows({{0, 0}});
  Matrix centers = from_rows({{1, 0}, {-1, 0}});
  CHECK(clustering::assign_centers(p, centers)[0] == 0);
}

TEST_CASE("subspace centers cost functional") {
  Matrix p = from_rows({{0, 1}, {2, 0}});
  Subspace ex{Matrix(Matrix::Identity(2, 1))};
  Matrix ey_basis = Matrix::Zero(2, 1);
  ey_basis(1, 0) = 1;
  Subspace ey{ey_basis};
  // Each row picks the axis it lies on.
  CHECK(clustering::subspace_cost(p, {ex, ey}) == doctest::Approx(0.0));
  CHECK(clustering::subspace_cost(p, {ex}) == doctest::Approx(1.0));
}

TEST_CASE("lloyd: k = n and the enumerable two-pair instance") {
  Matrix p = mixture(12, 3, 4, 0.01, 5);
  auto sol = clustering::lloyd(p, 12, KmeansInit::KmeansPlusPlus, 10, 3);
  CHECK(sol.cost <= 1e-16);

  Matrix pairs = from_rows({{0, 0}, {0, 2}, {10, 0}, {10, 2}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = clustering::lloyd(pairs, 2, KmeansInit::KmeansPlusPlus, 25, seed);
    CHECK(s.cost == doctest::Approx(4.0));
  }
}

TEST_CASE("lloyd: recorded cost sequence is non-increasing") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Matrix p = sketching::gaussian_matrix(40, 2, 900 + seed);
    auto sol = clustering::lloyd(p, 4, KmeansInit::KmeansPlusPlus, 30, seed);
    for (std::size_t i = 1; i < sol.iteration_costs.size(); ++i)
      CHECK(sol.iteration_costs[i] <= sol.iteration_costs[i - 1] + 1e-10);
    // Reported cost is recomputable from the centers.
    CHECK(sol.cost ==
          doctest::Approx(clustering::kmeans_cost(p, sol.centers)).epsilon(1e-8));
    for (int a : sol.assignment) {
      CHECK(a >= 0);
      CHECK(a < 4);
    }
  }
}

TEST_CASE("lloyd: forgy initialization also converges") {
  Matrix p = mixture(60, 4, 3, 0.05, 8);
  auto sol = clustering::lloyd(p, 3, KmeansInit::Forgy, 50, 2);
  CHECK(sol.cost <= 60 * 0.05 * 0.05 * 4 * 10);
}

TEST_CASE("weighted lloyd with equal weights matches plain lloyd") {
  Matrix p = sketching::gaussian_matrix(30, 3, 77);
  clustering::WeightedPoints wp{p, Vector::Constant(30, 1.0)};
  auto a = clustering::lloyd(p, 4, KmeansInit::KmeansPlusPlus, 20, 9);
  auto b = clustering::lloyd_weighted(wp, 4, KmeansInit::KmeansPlusPlus, 20, 9);
  CHECK((a.centers - b.centers).cwiseAbs().maxCoeff() <= 1e-10);

  clustering::WeightedPoints scaled{p, Vector::Constant(30, 3.0)};
  auto c = clustering::lloyd_weighted(scaled, 4, KmeansInit::KmeansPlusPlus, 20, 9);
  CHECK((a.centers - c.centers).cwiseAbs().maxCoeff() <= 1e-10);

  clustering::WeightedPoints bad{p, Vector::Constant(30, -1.0)};
  CHECK_THROWS_AS(clustering::lloyd_weighted(bad, 2, KmeansInit::KmeansPlusPlus, 5, 1),
                  std::invalid_argument);
}

TEST_CASE("distributed kmeans: zero-radius clusters are recovered exactly") {
  // k distinct locations, zero noise.
  Matrix means = 5.0 * sketching::gaussian_matrix(4, 6, 31);
  Matrix p(40, 6);
  for (Index i = 0; i < 40; ++i) p.row(i) = means.row(i % 4);
  auto data = protocol::partition_powerlaw(p, 3, 2.0, 32);
  auto result = clustering::distributed_kmeans(data, 4, 0.3, 10, 33);
  CHECK(result.solution.cost <= 1e-9);
}

TEST_CASE("distributed kmeans: s = 1 with a full sample collapses to lloyd") {
  Matrix p = mixture(50, 5, 3, 0.2, 40);
  auto data = protocol::partition_powerlaw(p, 1, 2.0, 41);
  clustering::KmeansOptions opts;
  opts.projection_dim = 3;
  auto result = clustering::distributed_kmeans(data, 3, 0.3, 50, 42, opts);

  // Baseline: the coordinator's own Lloyd run on the projected
  // coordinates, plus the projection residual.
  const Matrix coords = p * result.subspace.basis;
  auto baseline = clustering::lloyd(coords, 3, KmeansInit::KmeansPlusPlus,
                                    opts.merge_iters, clustering::coordinator_seed(42));
  const double residual = linalg::dist_sq(p, result.subspace);
  CHECK(result.solution.cost == doctest::Approx(baseline.cost + residual).epsilon(1e-8));
}

TEST_CASE("distributed kmeans: cost ratio against global lloyd") {
  Matrix p = linalg::center(mixture(400, 10, 5, 0.5, 50));
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < 3; ++s)
    best = std::min(best,
                    clustering::lloyd(p, 5, KmeansInit::KmeansPlusPlus, 60, 500 + s).cost);
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto data = protocol::partition_powerlaw(p, 4, 2.0, 600 + seed);
    clustering::KmeansOptions opts;
    opts.projection_dim = 6;
    auto result = clustering::distributed_kmeans(data, 5, 0.3, 80, 700 + seed, opts);
    worst_ratio = std::max(worst_ratio, result.solution.cost / best);
  }
  CHECK(worst_ratio <= 1.25);
}

TEST_CASE("distributed kmeans: transcript matches the coreset formula") {
  Matrix p = mixture(200, 8, 3, 0.4, 60);
  auto data = protocol::partition_powerlaw(p, 4, 2.0, 61);
  const Index t = 5;
  const Index coreset = 40;
  clustering::KmeansOptions opts;
  opts.projection_dim = t;
  auto result = clustering::distributed_kmeans(data, 3, 0.3, coreset, 62, opts);

  // Upward factors, downward broadcast, one cost word per node, then
  // the coreset payloads.
  const Index d = 8;
  std::int64_t expected_coreset = 0;
  Index sampled_total = 0;
  for (const auto& node : result.nodes) {
    expected_coreset += node.local_k * t + node.local_k + node.sampled * (t + 1);
    sampled_total += node.sampled;
  }
  CHECK(sampled_total == coreset);
  using protocol::MessageKind;
  CHECK(result.transcript.words_of_kind(MessageKind::CoresetPoints) == expected_coreset);
  CHECK(result.transcript.words_of_kind(MessageKind::LocalFactors) == 4 * (t * d + t));
  CHECK(result.transcript.words_of_kind(MessageKind::GlobalSubspace) == 4 * t * d);
  CHECK(result.transcript.words_of_kind(MessageKind::Other) == 4);
  CHECK(result.transcript.total_words ==
        4 * (t * d + t) + 4 * t * d + expected_coreset + 4);
}

TEST_CASE("distributed kmeans: lifted centers stay inside the subspace") {
  Matrix p = mixture(150, 7, 3, 0.3, 70);
  auto data = protocol::partition_powerlaw(p, 3, 2.0, 71);
  clustering::KmeansOptions opts;
  opts.projection_dim = 4;
  auto result = clustering::distributed_kmeans(data, 3, 0.3, 30, 72, opts);
  const Matrix residual =
      result.solution.centers -
      (result.solution.centers * result.subspace.basis) * result.subspace.basis.transpose();
  CHECK(residual.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("projected-proxy solutions transfer back to the original data") {
  // Remark-1 style consequence: any solution found on the proxy prices
  // within (1+eps)/(1-eps) of its proxy cost on the real data.
  const Index k = 3;
  const double eps = 0.3;
  Matrix p = linalg::center(mixture(300, 12, k, 1.0, 80));
  auto data = protocol::partition_powerlaw(p, 4, 2.0, 81);
  const Index t = std::min<Index>(
      k + static_cast<Index>(std::ceil(4.0 * k / (eps * eps))) - 1, 12);
  protocol::DisPcaParams params;
  params.t1 = t;
  params.t2 = t;
  params.seed = 82;
  auto pca = protocol::dispca(data, params);
  Matrix p_tilde = linalg::project(p, pca.subspace);
  const double c0 = p.squaredNorm() - p_tilde.squaredNorm();

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto sol = clustering::lloyd(p_tilde, k, KmeansInit::KmeansPlusPlus, 40, 90 + seed);
    const double on_p = clustering::kmeans_cost(p, sol.centers);
    const double on_proxy = clustering::kmeans_cost(p_tilde, sol.centers) + c0;
    CHECK(on_p <= (1.0 + eps) / (1.0 - eps) * on_proxy + 1e-9);
  }
}

TEST_CASE("pcr: full space equals ordinary least squares") {
  Matrix x = sketching::gaussian_matrix(40, 5, 100);
  Vector beta(5);
  beta << 1, -2, 0.5, 3, -1;
  Vector y = x * beta;
  auto fit = clustering::pcr(x, y, Subspace{Matrix(Matrix::Identity(5, 5))}, 0.0);
  CHECK(fit.fit_error <= 1e-8);
  CHECK((fit.lifted - beta).norm() <= 1e-8);

  // Targets realizable in the top principal coordinates.
  const linalg::SvdFactors f = linalg::svd(x);
  Vector y2 = (x * f.v.leftCols(2)) * Vector::Ones(2).eval();
  auto fit2 = clustering::pcr(x, y2, Subspace{f.v.leftCols(2)}, 0.0);
  CHECK(fit2.fit_error <= 1e-8);
}

TEST_CASE("pcr: axis target and rank error") {
  Matrix x = sketching::gaussian_matrix(30, 4, 110);
  Vector y = x.col(0);
  auto fit = clustering::pcr(x, y, Subspace{Matrix(Matrix::Identity(4, 1))}, 0.0);
  CHECK(fit.coefficients(0) == doctest::Approx(1.0));
  CHECK(fit.fit_error <= 1e-10);

  // Duplicate direction makes the normal equations singular.
  Matrix xx(30, 2);
  xx.col(0) = x.col(0);
  xx.col(1) = x.col(0);
  Matrix basis = Matrix::Zero(2, 2);
  basis << 1, 0, 0, 1;
  CHECK_THROWS_AS(clustering::pcr(xx, y, Subspace{basis}, 0.0), RankError);
  // A ridge term restores solvability.
  auto ridged = clustering::pcr(xx, y, Subspace{basis}, 1e-6);
  CHECK(ridged.fit_error <= 1e-3);
}

}  // TEST_SUITE
