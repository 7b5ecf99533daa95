#include <doctest.h>

#include <cmath>
#include <random>

#include "dispca/errors.hpp"
#include "dispca/linalg.hpp"
#include "dispca/rng.hpp"
#include "dispca/sketching.hpp"
#include "oracles.hpp"

using namespace dispca;
using linalg::Subspace;
using linalg::SvdFactors;

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

Matrix random_matrix(Index n, Index d, std::uint64_t seed) {
  return sketching::gaussian_matrix(n, d, seed);
}

Matrix random_orthonormal(Index d, Index k, std::uint64_t seed) {
  return linalg::qr_factorize(random_matrix(d, k, seed)).q;
}

double reconstruct_error(const Matrix& a, const SvdFactors& f) {
  return (a - f.u * f.sigma.asDiagonal() * f.v.transpose()).norm();
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("center subtracts column means") {
  Matrix a = from_rows({{1, 1}, {3, 3}});
  Matrix c = linalg::center(a);
  CHECK(c.isApprox(from_rows({{-1, -1}, {1, 1}}), 1e-14));

  Matrix z = Matrix::Zero(3, 2);
  CHECK(linalg::center(z).isZero(0.0));

  Matrix col = from_rows({{2}, {4}, {6}});
  CHECK(linalg::center(col).isApprox(from_rows({{-2}, {0}, {2}}), 1e-14));

  Matrix r = random_matrix(40, 7, 11);
  Matrix centered = linalg::center(r);
  for (Index j = 0; j < 7; ++j) {
    const double scale = centered.col(j).cwiseAbs().maxCoeff();
    CHECK(std::abs(centered.col(j).mean()) <= 1e-12 * std::max(scale, 1.0));
  }
  CHECK(linalg::center(centered).isApprox(centered, 1e-12));
}

TEST_CASE("svd recovers known singular values") {
  CHECK(linalg::svd(Matrix::Identity(2, 2)).sigma.isApprox(Vector::Ones(2)));

  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 3;
  diag(1, 1) = 2;
  Vector s = linalg::svd(diag).sigma;
  CHECK(s(0) == doctest::Approx(3.0));
  CHECK(s(1) == doctest::Approx(2.0));

  // sigma_i = sqrt(15 +- sqrt(221)), the characteristic-polynomial roots
  // of A^T A for A = [[1,2],[3,4]].
  Matrix a = from_rows({{1, 2}, {3, 4}});
  Vector sa = linalg::svd(a).sigma;
  CHECK(sa(0) == doctest::Approx(std::sqrt(15.0 + std::sqrt(221.0))).epsilon(1e-9));
  CHECK(sa(1) == doctest::Approx(std::sqrt(15.0 - std::sqrt(221.0))).epsilon(1e-9));
  CHECK(sa(0) == doctest::Approx(5.46499).epsilon(1e-5));
  CHECK(sa(1) == doctest::Approx(0.36597).epsilon(1e-5));
}

TEST_CASE("svd factors satisfy their contract on random inputs") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Index n = 5 + static_cast<Index>(seed % 4) * 3;
    const Index d = 4 + static_cast<Index>(seed % 3) * 2;
    Matrix a = random_matrix(n, d, 100 + seed);
    SvdFactors f = linalg::svd(a);
    CHECK(f.count() == std::min(n, d));
    CHECK(linalg::is_orthonormal(f.u));
    CHECK(linalg::is_orthonormal(f.v));
    for (Index i = 1; i < f.count(); ++i) CHECK(f.sigma(i - 1) >= f.sigma(i));
    CHECK(f.sigma.minCoeff() >= 0.0);
    CHECK(reconstruct_error(a, f) <= 1e-8 * std::max(1.0, a.norm()));
  }
}

TEST_CASE("svd sign convention pins the factor matrices") {
  Matrix a = random_matrix(9, 5, 42);
  SvdFactors f1 = linalg::svd(a);
  SvdFactors f2 = linalg::svd(a);
  CHECK(f1.v == f2.v);
  for (Index j = 0; j < f1.v.cols(); ++j) {
    Index imax = 0;
    f1.v.col(j).cwiseAbs().maxCoeff(&imax);
    CHECK(f1.v(imax, j) >= 0.0);
  }
}

TEST_CASE("svd rejects non-finite input") {
  Matrix a = Matrix::Ones(2, 2);
  a(0, 0) = std::nan("");
  CHECK_THROWS_AS(linalg::svd(a), std::invalid_argument);
}

TEST_CASE("truncate slices the leading factors") {
  Matrix d3 = Matrix::Zero(3, 3);
  d3.diagonal() << 3, 2, 1;
  SvdFactors f = linalg::svd(d3);
  SvdFactors t2 = linalg::truncate(f, 2);
  CHECK(t2.sigma.isApprox((Vector(2) << 3, 2).finished()));

  SvdFactors all = linalg::truncate(f, f.count());
  CHECK(all.sigma == f.sigma);
  CHECK(all.v == f.v);

  Matrix rank1 = random_matrix(6, 1, 5) * random_matrix(1, 4, 6);
  SvdFactors r1 = linalg::truncate(linalg::svd(rank1), 1);
  CHECK(reconstruct_error(rank1, r1) <= 1e-10);

  CHECK_THROWS_AS(linalg::truncate(f, 0), std::invalid_argument);
  CHECK_THROWS_AS(linalg::truncate(f, 4), std::invalid_argument);
}

TEST_CASE("project onto a basis") {
  Matrix a = random_matrix(5, 4, 9);
  Subspace full{Matrix(Matrix::Identity(4, 4))};
  CHECK(linalg::project(a, full).isApprox(a, 1e-12));

  Subspace e1{Matrix(Matrix::Identity(2, 1))};
  CHECK(linalg::project(from_rows({{1, 1}}), e1).isApprox(from_rows({{1, 0}}), 1e-14));

  // A rank-r matrix equals its projection onto its top-r right singular
  // subspace.
  Matrix low = random_matrix(8, 3, 21) * random_matrix(3, 6, 22);
  Subspace top{linalg::truncate(linalg::svd(low), 3).v};
  CHECK((linalg::project(low, top) - low).norm() <= 1e-9);

  Matrix once = linalg::project(a, Subspace{random_orthonormal(4, 2, 33)});
  Matrix twice = linalg::project(once, Subspace{random_orthonormal(4, 2, 33)});
  CHECK((once - twice).norm() <= 1e-10);

  CHECK_THROWS_AS(linalg::project(a, Subspace{Matrix(Matrix::Identity(3, 1))}),
                  std::invalid_argument);
}

TEST_CASE("dist_sq equals the row-by-row residual") {
  Matrix a = random_matrix(6, 4, 77);
  Subspace top{linalg::svd(a).v};
  CHECK(linalg::dist_sq(a, top) <= 1e-16);

  CHECK(linalg::dist_sq(from_rows({{0, 1}}), Subspace{Matrix(Matrix::Identity(2, 1))}) ==
        doctest::Approx(1.0));

  Matrix big = random_matrix(10, 5, 88);
  Matrix axes = Matrix::Identity(5, 2);
  CHECK(linalg::dist_sq(big, Subspace{axes}) ==
        doctest::Approx(oracles::brute_force_dist_sq(big, axes)).epsilon(1e-10));

  Matrix ortho = random_orthonormal(5, 3, 89);
  CHECK(linalg::dist_sq(big, Subspace{ortho}) ==
        doctest::Approx(oracles::brute_force_dist_sq(big, ortho)).epsilon(1e-10));
}

TEST_CASE("pythagorean identity") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Matrix a = random_matrix(9, 6, 200 + seed);
    Matrix b = random_orthonormal(6, 1 + static_cast<Index>(seed % 4), 300 + seed);
    const double lhs = a.squaredNorm();
    const double rhs = (a * b).squaredNorm() + linalg::dist_sq(a, Subspace{b});
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
  }
}

TEST_CASE("eckart-young: truncation residual equals the tail energy") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix a = random_matrix(12, 6, 400 + seed);
    SvdFactors f = linalg::svd(a);
    for (Index t : {1, 3, 5}) {
      SvdFactors ft = linalg::truncate(f, t);
      const double resid =
          (a - ft.u * ft.sigma.asDiagonal() * ft.v.transpose()).squaredNorm();
      double tail = 0.0;
      for (Index i = t; i < f.count(); ++i) tail += f.sigma(i) * f.sigma(i);
      CHECK(resid == doctest::Approx(tail).epsilon(1e-8));
    }
  }
}

TEST_CASE("tau: data-dependent truncation level") {
  // Exact rank r: the tail sum vanishes and sigma_{r+1} = 0 qualifies.
  Matrix low = random_matrix(8, 2, 501) * random_matrix(2, 6, 502);
  CHECK(linalg::tau(low, 2, 0.5) == 3);

  Matrix d4 = Matrix::Zero(4, 4);
  d4.diagonal() << 2, 1, 1, 1;
  CHECK(linalg::tau(d4, 1, 1.0) == 2);

  // Identity: no t satisfies 1 <= 0.25 * 3, sentinel min(n, d).
  CHECK(linalg::tau(Matrix::Identity(5, 5), 2, 0.5) == 5);

  CHECK_THROWS_AS(linalg::tau(d4, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(linalg::tau(d4, 4, 0.5), std::invalid_argument);
}

TEST_CASE("tau bound and the truncation inequality at t = tau") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Matrix a = random_matrix(12, 10, 600 + seed);
    const Index r = 2;
    const double eps = 0.5;
    SvdFactors f = linalg::svd(a);
    double tail = 0.0;
    for (Index i = r; i < f.count(); ++i) tail += f.sigma(i) * f.sigma(i);
    if (tail <= 0.0) continue;
    const Index t = linalg::tau(a, r, eps);
    CHECK(t <= r + static_cast<Index>(std::ceil(r / eps)));
    // Substituting t = tau keeps the generalized truncation bound valid.
    Matrix x = random_matrix(10, r, 700 + seed);
    x *= std::sqrt(static_cast<double>(r)) / x.norm();
    SvdFactors ft = linalg::truncate(f, t);
    Matrix a_hat = (a * ft.v) * ft.v.transpose();
    CHECK(((a - a_hat) * x).squaredNorm() <= eps * tail + 1e-9);
    ++checked;
  }
  CHECK(checked >= 30);
}

TEST_CASE("generalized truncation bound, non-orthonormal probe") {
  // |(A - A_hat) X|_F^2 = |A X|_F^2 - |A_hat X|_F^2 for any X, and both
  // are bounded by eps * tail when t >= r + ceil(r/eps) - 1.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Matrix a = random_matrix(10, 8, 800 + seed);
    const Index r = 2;
    const double eps = 0.5;
    const Index t = r + static_cast<Index>(std::ceil(r / eps)) - 1;  // = 5 <= d-1
    SvdFactors ft = linalg::truncate(linalg::svd(a), t);
    Matrix a_hat = (a * ft.v) * ft.v.transpose();

    Matrix x = random_matrix(8, 3, 900 + seed);
    x *= std::sqrt(static_cast<double>(r)) / x.norm();  // |X|_F^2 = r

    const double diff = ((a - a_hat) * x).squaredNorm();
    const double gap = (a * x).squaredNorm() - (a_hat * x).squaredNorm();
    CHECK(diff == doctest::Approx(gap).epsilon(1e-8));

    double tail = 0.0;
    const Vector sigma = linalg::svd(a).sigma;
    for (Index i = r; i < sigma.size(); ++i) tail += sigma(i) * sigma(i);
    CHECK(diff <= eps * tail + 1e-9);
  }
}

TEST_CASE("truncation bound with orthonormal probe and dist_sq right side") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Matrix a = random_matrix(10, 8, 1000 + seed);
    const Index r = 2;
    const double eps = 0.5;
    // Non-degenerate instance: t = r + ceil(r/eps) - 1 fits inside d.
    const Index t = r + static_cast<Index>(std::ceil(r / eps)) - 1;
    SvdFactors ft = linalg::truncate(linalg::svd(a), t);
    Matrix a_hat = (a * ft.v) * ft.v.transpose();
    Matrix x = random_orthonormal(8, r, 1100 + seed);

    const double gap = (a * x).squaredNorm() - (a_hat * x).squaredNorm();
    CHECK(gap >= -1e-9);
    CHECK(gap <= eps * linalg::dist_sq(a, Subspace{x}) + 1e-9);

    // The spec's literal t = r + ceil(4r/eps) - 1 exceeds d here, which
    // clamps to the full factor count and makes the bound trivial.
    const Index t_full = std::min<Index>(
        r + static_cast<Index>(std::ceil(4.0 * r / eps)) - 1, std::min(a.rows(), a.cols()));
    SvdFactors ff = linalg::truncate(linalg::svd(a), t_full);
    Matrix a_full = (a * ff.v) * ff.v.transpose();
    const double gap_full = (a * x).squaredNorm() - (a_full * x).squaredNorm();
    CHECK(gap_full >= -1e-9);
    CHECK(gap_full <= eps * linalg::dist_sq(a, Subspace{x}) + 1e-9);
  }
}

TEST_CASE("weak triangle inequality helper") {
  auto rng = make_rng(123);
  std::uniform_real_distribution<double> val(-10.0, 10.0);
  std::uniform_real_distribution<double> epsd(0.01, 0.99);
  for (int i = 0; i < 500; ++i)
    CHECK(oracles::weak_triangle_holds(val(rng), val(rng), epsd(rng)));
}

TEST_CASE("qr factorization") {
  Matrix a = random_matrix(9, 4, 1200);
  auto [q, r] = linalg::qr_factorize(a);
  CHECK(linalg::is_orthonormal(q));
  CHECK((q * r - a).norm() <= 1e-8 * a.norm());
}

TEST_CASE("spectral norm matches the top singular value") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix a = random_matrix(10, 7, 1300 + seed);
    CHECK(linalg::spectral_norm(a) ==
          doctest::Approx(linalg::svd(a).sigma(0)).epsilon(1e-5));
  }
  CHECK(linalg::spectral_norm(Matrix::Zero(3, 3)) == 0.0);
}

TEST_CASE("plain helpers: frobenius_sq, matmul, transpose, nnz") {
  Matrix a = from_rows({{1, 2}, {3, 4}});
  CHECK(frobenius_sq(a) == doctest::Approx(30.0));
  CHECK(matmul(a, Matrix(Matrix::Identity(2, 2))).isApprox(a));
  CHECK_THROWS_AS(matmul(a, Matrix::Zero(3, 3)), std::invalid_argument);
  CHECK(transpose(a)(0, 1) == 3.0);
  Matrix sparse = Matrix::Zero(3, 3);
  sparse(1, 2) = 5.0;
  CHECK(nnz(sparse) == 1);
}

TEST_CASE("complete_basis extends with an orthonormal complement") {
  Matrix partial = random_orthonormal(6, 2, 1400);
  Matrix full = linalg::complete_basis(partial, 5);
  CHECK(full.cols() == 5);
  CHECK(full.leftCols(2) == partial);
  CHECK(linalg::is_orthonormal(full));
  CHECK_THROWS_AS(linalg::complete_basis(partial, 7), std::invalid_argument);
}

TEST_CASE("oracle agreement: svd vs charpoly and jacobi eigensolvers") {
  auto rng = make_rng(9000);
  std::uniform_int_distribution<Index> small_d(1, 3);
  for (int i = 0; i < 30; ++i) {
    const Index d = small_d(rng);
    Matrix a = random_matrix(d + 3, d, 9100 + static_cast<std::uint64_t>(i));
    const Vector s = linalg::svd(a).sigma;
    const auto expected = oracles::singular_values_charpoly(a);
    for (Index j = 0; j < d; ++j)
      CHECK(s(j) == doctest::Approx(expected[static_cast<std::size_t>(j)]).epsilon(1e-6));
  }
  std::uniform_int_distribution<Index> mid_d(4, 8);
  for (int i = 0; i < 30; ++i) {
    const Index d = mid_d(rng);
    Matrix a = random_matrix(d + 4, d, 9500 + static_cast<std::uint64_t>(i));
    const Vector s = linalg::svd(a).sigma;
    const auto expected = oracles::singular_values_jacobi(a);
    for (Index j = 0; j < d; ++j)
      CHECK(s(j) == doctest::Approx(expected[static_cast<std::size_t>(j)]).epsilon(1e-6));
  }
}

}  // TEST_SUITE
