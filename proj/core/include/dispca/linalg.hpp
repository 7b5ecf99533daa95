#pragma once

#include "dispca/matrix.hpp"

namespace dispca::linalg {

// Repo-wide numeric tolerances. The guarantees in the protocol and
// clustering layers are all stated against these two constants.
inline constexpr double kOrthoTol = 1e-10;
inline constexpr double kReconstructTol = 1e-8;

/// Thin SVD triple (U, sigma, V) with sigma sorted non-increasing,
/// U and V orthonormal-column matrices, and U * diag(sigma) * V^T
/// reconstructing the factored input.
struct SvdFactors {
  Matrix u;      // n x m
  Vector sigma;  // m, non-increasing, >= 0
  Matrix v;      // d x m

  Index count() const { return sigma.size(); }
};

/// A linear subspace of R^d given by an orthonormal column basis.
struct Subspace {
  Matrix basis;  // d x t, basis^T * basis = I

  Index ambient_dim() const { return basis.rows(); }
  Index dim() const { return basis.cols(); }
};

struct QrFactors {
  Matrix q;  // orthonormal columns
  Matrix r;  // upper triangular
};

bool is_orthonormal(const Matrix& a, double tol = kOrthoTol);

/// Subtracts the column mean from every row.
Matrix center(const Matrix& points);

/// Thin SVD with min(rows, cols) factors. Right singular vectors are
/// sign-normalized so the entry of largest magnitude is non-negative,
/// which makes factor matrices reproducible across runs.
SvdFactors svd(const Matrix& a);

/// Leading-t slice of an SVD.
SvdFactors truncate(const SvdFactors& f, Index t);

/// A * B * B^T for the orthonormal basis B of the subspace.
Matrix project(const Matrix& a, const Subspace& s);

/// Sum of squared row distances to the subspace: |A - A B B^T|_F^2.
double dist_sq(const Matrix& a, const Subspace& s);

/// Smallest t with sigma_t^2 <= (eps/r) * sum_{i>r} sigma_i^2(A);
/// returns min(rows, cols) as a sentinel when no t in range qualifies.
Index tau(const Matrix& a, Index r, double eps);

/// Largest singular value estimated by power iteration on A^T A,
/// relative tolerance 1e-6.
double spectral_norm(const Matrix& a);

/// Thin Householder QR: A = Q R with Q orthonormal.
QrFactors qr_factorize(const Matrix& a);

/// Extends an orthonormal d x k matrix to d x total by appending
/// orthonormal complement columns. The leading k columns are kept
/// verbatim; total must not exceed d.
Matrix complete_basis(const Matrix& partial, Index total);

}  // namespace dispca::linalg
