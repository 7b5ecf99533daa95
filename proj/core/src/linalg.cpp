#include "dispca/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dispca/errors.hpp"

namespace dispca::linalg {

namespace {

// Flip each right singular vector so its largest-magnitude entry is
// non-negative; the matching left vector flips with it.
void normalize_signs(SvdFactors& f) {
  for (Index j = 0; j < f.v.cols(); ++j) {
    Index imax = 0;
    f.v.col(j).cwiseAbs().maxCoeff(&imax);
    if (f.v(imax, j) < 0.0) {
      f.v.col(j) *= -1.0;
      if (j < f.u.cols()) f.u.col(j) *= -1.0;
    }
  }
}

}  // namespace

bool is_orthonormal(const Matrix& a, double tol) {
  if (a.cols() == 0) return true;
  Matrix gram = a.transpose() * a;
  gram.diagonal().array() -= 1.0;
  return gram.cwiseAbs().maxCoeff() <= tol * static_cast<double>(a.cols());
}

Matrix center(const Matrix& points) {
  if (points.rows() < 1) throw std::invalid_argument("center: empty matrix");
  Matrix out = points;
  Eigen::RowVectorXd mean = points.colwise().mean();
  out.rowwise() -= mean;
  return out;
}

SvdFactors svd(const Matrix& a) {
  if (!all_finite(a)) throw std::invalid_argument("svd: non-finite entries");
  SvdFactors f;
  // BDC is the right tool for the tall blocks the protocol produces;
  // Jacobi is more accurate on small inputs.
  if (std::min(a.rows(), a.cols()) <= 16) {
    Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success)
      throw NumericError("svd: Jacobi iteration did not converge",
                         dec.singularValues().size() ? dec.singularValues()(0) : 0.0);
    f.u = dec.matrixU();
    f.sigma = dec.singularValues();
    f.v = dec.matrixV();
  } else {
    Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success) {
      double residual = (a - dec.matrixU() * dec.singularValues().asDiagonal() *
                                 dec.matrixV().transpose())
                            .norm();
      throw NumericError("svd: bidiagonal divide-and-conquer did not converge", residual);
    }
    f.u = dec.matrixU();
    f.sigma = dec.singularValues();
    f.v = dec.matrixV();
  }
  normalize_signs(f);
  return f;
}

SvdFactors truncate(const SvdFactors& f, Index t) {
  if (t < 1 || t > f.count())
    throw std::invalid_argument("truncate: t out of range");
  SvdFactors out;
  out.u = f.u.leftCols(t);
  out.sigma = f.sigma.head(t);
  out.v = f.v.leftCols(t);
  return out;
}

Matrix project(const Matrix& a, const Subspace& s) {
  if (a.cols() != s.basis.rows())
    throw std::invalid_argument("project: dimension mismatch");
  return (a * s.basis) * s.basis.transpose();
}

double dist_sq(const Matrix& a, const Subspace& s) {
  if (a.cols() != s.basis.rows())
    throw std::invalid_argument("dist_sq: dimension mismatch");
  return (a - project(a, s)).squaredNorm();
}

Index tau(const Matrix& a, Index r, double eps) {
  const Index m = std::min(a.rows(), a.cols());
  if (r < 1 || r >= m) throw std::invalid_argument("tau: r out of range");
  if (eps <= 0.0 || eps > 1.0) throw std::invalid_argument("tau: eps out of (0, 1]");
  const Vector sigma = svd(a).sigma;
  double tail = 0.0;
  for (Index i = r; i < m; ++i) tail += sigma(i) * sigma(i);
  // Singular values at round-off scale count as zero, so an exact-rank-r
  // input keeps its zero tail and yields tau = r + 1.
  const double floor = 1e-24 * sigma(0) * sigma(0);
  const double threshold = std::max(eps / static_cast<double>(r) * tail, floor);
  for (Index t = 1; t <= m; ++t)
    if (sigma(t - 1) * sigma(t - 1) <= threshold) return t;
  return m;  // sentinel: the argmin ranges over 1..min(n,d)
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Index d = a.cols();
  Vector v = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
  double estimate = 0.0;
  constexpr int kMaxIters = 1000;
  constexpr double kRelTol = 1e-6;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    Vector w = a.transpose() * (a * v);
    double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    double next = std::sqrt(norm);
    if (iter > 0 && std::abs(next - estimate) <= kRelTol * next) return next;
    estimate = next;
  }
  return estimate;
}

QrFactors qr_factorize(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  const Index k = std::min(a.rows(), a.cols());
  QrFactors out;
  out.q = qr.householderQ() * Matrix::Identity(a.rows(), k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return out;
}

Matrix complete_basis(const Matrix& partial, Index total) {
  const Index d = partial.rows();
  const Index k = partial.cols();
  if (total > d) throw std::invalid_argument("complete_basis: total exceeds ambient dim");
  if (total <= k) return partial.leftCols(total);
  if (k == 0) return Matrix(Matrix::Identity(d, total));
  // Householder Q of the partial basis spans it with its first k columns,
  // so the remaining columns are an orthonormal complement.
  Eigen::HouseholderQR<Matrix> qr(partial);
  Matrix full = qr.householderQ() * Matrix::Identity(d, d);
  Matrix out(d, total);
  out.leftCols(k) = partial;
  out.rightCols(total - k) = full.middleCols(k, total - k);
  return out;
}

}  // namespace dispca::linalg
