#pragma once

#include <cstdint>
#include <vector>

#include "dispca/linalg.hpp"
#include "dispca/matrix.hpp"

namespace dispca::sketching {

/// A sparse subspace-embedding plan: every input row is assigned one
/// bucket in [0, output_rows) and a sign in {-1, +1}. Applying the plan
/// scatter-adds signed rows, so the embedded matrix never has more
/// nonzeros than the input. Rebuilding from the same seed yields the
/// identical plan.
struct CountSketchPlan {
  Index input_rows = 0;
  Index output_rows = 0;
  std::vector<Index> bucket_of;      // size input_rows, values in [0, output_rows)
  std::vector<signed char> sign_of;  // size input_rows, values +/-1
  std::uint64_t seed = 0;
};

/// One embedding attempt: the sketched matrix H*A and its SVD. The
/// embedded matrix is stored with its all-zero bucket rows dropped
/// (bucket order preserved), which leaves the singular values and right
/// singular vectors untouched and keeps the footprint at O(nnz(A)).
struct EmbeddingCandidate {
  CountSketchPlan plan;
  Matrix embedded;
  linalg::SvdFactors factors;
};

struct BoostResult {
  CountSketchPlan plan;
  Matrix embedded;
  int candidates_tried = 0;  // distinct j visited before one passed
  int candidate_count = 0;
};

CountSketchPlan plan_countsketch(Index n, Index ell, std::uint64_t seed);

Matrix apply_countsketch(const CountSketchPlan& plan, const Matrix& a);

/// H*A with the untouched (all-zero) bucket rows removed, remaining
/// rows in ascending bucket order. Shares singular values and right
/// singular vectors with apply_countsketch's output.
Matrix apply_countsketch_compact(const CountSketchPlan& plan, const Matrix& a);

/// Worst observed relative norm distortion max_y | |HAy| / |Ay| - 1 |
/// over `probes` random unit directions; probes with |Ay| = 0 are
/// skipped, and 0 is returned if every probe was skipped.
double distortion(const CountSketchPlan& plan, const Matrix& a, int probes,
                  std::uint64_t seed);

/// i.i.d. standard normal matrix, deterministic per seed.
Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed);

/// True when all singular values of Sigma_other * V_other^T * V_self *
/// Sigma_self^{-1} lie in [1 - eps/3, 1 + eps/3]; this is the pairwise
/// agreement test two successful embeddings always pass. False when
/// Sigma_self is singular.
bool band_test(const linalg::SvdFactors& self, const linalg::SvdFactors& other,
               double eps);

/// Selection loop over prepared candidates: visits candidates in a
/// seeded random order and returns the index of the first one that
/// agrees with at least half of the others, plus how many were visited.
/// Throws BoostFailure when none qualifies.
std::pair<std::size_t, int> select_embedding(
    const std::vector<EmbeddingCandidate>& candidates, double eps,
    std::uint64_t seed);

/// Success-probability booster: builds max(2, ceil(6 ln(1/delta)))
/// independent candidates at accuracy eps/9 — each sized
/// ell = ceil(d^2 / (eps/9)^2) unless ell_override is given — and
/// returns one that passes the pairwise singular-value band test
/// against at least half of its peers.
BoostResult boost_embedding(const Matrix& a, double eps, double delta,
                            std::uint64_t seed, Index ell_override = 0);

}  // namespace dispca::sketching
