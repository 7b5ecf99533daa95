#pragma once

#include <cstdint>

#include "dispca/linalg.hpp"
#include "dispca/matrix.hpp"

namespace dispca::rsvd {

struct RsvdParams {
  Index target_rank_t = 1;     // t >= 1; output carries 2t factors
  int power_iterations_q = 1;  // q >= 0
  std::uint64_t seed = 0;
};

/// Randomized SVD: probes the row space with a Gaussian matrix, runs q
/// power iterations (re-orthonormalized each round, which is the
/// numerically stable form of (A^T A)^q A^T Omega), then factors the
/// small projected matrix. Returns exactly 2t factors; the rank-2t
/// projection A V V^T carries a 2*sigma_{t+1}(A) spectral error with
/// high probability. When rank(A) < 2t the basis is padded with
/// orthonormal complement columns and zero singular values.
linalg::SvdFactors randomized_svd(const Matrix& a, const RsvdParams& params);

/// Power-iteration count max(ceil(ln(d/eps)), ceil(ln(s*k/eps))), at
/// least 1; the default the fast protocol path uses.
int default_power_iterations(Index d, Index s, Index k, double eps);

}  // namespace dispca::rsvd
