#include "dispca/sketching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dispca/errors.hpp"
#include "dispca/rng.hpp"

namespace dispca::sketching {

CountSketchPlan plan_countsketch(Index n, Index ell, std::uint64_t seed) {
  if (n < 1 || ell < 1)
    throw std::invalid_argument("plan_countsketch: n and ell must be >= 1");
  CountSketchPlan plan;
  plan.input_rows = n;
  plan.output_rows = ell;
  plan.seed = seed;
  plan.bucket_of.resize(static_cast<std::size_t>(n));
  plan.sign_of.resize(static_cast<std::size_t>(n));
  auto rng = make_rng(seed);
  std::uniform_int_distribution<Index> bucket(0, ell - 1);
  std::uniform_int_distribution<int> coin(0, 1);
  for (Index i = 0; i < n; ++i) {
    plan.bucket_of[static_cast<std::size_t>(i)] = bucket(rng);
    plan.sign_of[static_cast<std::size_t>(i)] = coin(rng) ? 1 : -1;
  }
  return plan;
}

Matrix apply_countsketch(const CountSketchPlan& plan, const Matrix& a) {
  if (a.rows() != plan.input_rows)
    throw std::invalid_argument("apply_countsketch: row count mismatch");
  Matrix out = Matrix::Zero(plan.output_rows, a.cols());
  const Index d = a.cols();
  for (Index i = 0; i < a.rows(); ++i) {
    const double sign = plan.sign_of[static_cast<std::size_t>(i)];
    double* dst = out.row(plan.bucket_of[static_cast<std::size_t>(i)]).data();
    const double* src = a.row(i).data();
    for (Index j = 0; j < d; ++j)
      if (src[j] != 0.0) dst[j] += sign * src[j];
  }
  return out;
}

Matrix apply_countsketch_compact(const CountSketchPlan& plan, const Matrix& a) {
  if (a.rows() != plan.input_rows)
    throw std::invalid_argument("apply_countsketch_compact: row count mismatch");
  // Compact slot per occupied bucket, ascending bucket order.
  std::vector<Index> slot(static_cast<std::size_t>(plan.output_rows), -1);
  for (Index i = 0; i < a.rows(); ++i)
    slot[static_cast<std::size_t>(plan.bucket_of[static_cast<std::size_t>(i)])] = 0;
  Index occupied = 0;
  for (auto& s : slot)
    if (s == 0) s = occupied++;
  Matrix out = Matrix::Zero(occupied, a.cols());
  const Index d = a.cols();
  for (Index i = 0; i < a.rows(); ++i) {
    const double sign = plan.sign_of[static_cast<std::size_t>(i)];
    const Index row = slot[static_cast<std::size_t>(plan.bucket_of[static_cast<std::size_t>(i)])];
    double* dst = out.row(row).data();
    const double* src = a.row(i).data();
    for (Index j = 0; j < d; ++j)
      if (src[j] != 0.0) dst[j] += sign * src[j];
  }
  return out;
}

double distortion(const CountSketchPlan& plan, const Matrix& a, int probes,
                  std::uint64_t seed) {
  if (probes < 1) throw std::invalid_argument("distortion: probes must be >= 1");
  const Matrix embedded = apply_countsketch(plan, a);
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    Vector y(a.cols());
    for (Index j = 0; j < y.size(); ++j) y(j) = normal(rng);
    double norm = y.norm();
    if (norm == 0.0) continue;
    y /= norm;
    const double base = (a * y).norm();
    if (base == 0.0) continue;
    const double sketched = (embedded * y).norm();
    worst = std::max(worst, std::abs(sketched / base - 1.0));
  }
  return worst;
}

Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("gaussian_matrix: rows and cols must be >= 1");
  Matrix out(rows, cols);
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

bool band_test(const linalg::SvdFactors& self, const linalg::SvdFactors& other,
               double eps) {
  const Index m = self.sigma.size();
  if (m == 0 || other.sigma.size() != m) return false;
  // A candidate whose sketch lost rank is not invertible and has already
  // failed as an embedding of a full-column-rank input.
  if (self.sigma(m - 1) <= 0.0) return false;
  Matrix test = other.sigma.asDiagonal() * (other.v.transpose() * self.v) *
                self.sigma.cwiseInverse().asDiagonal();
  const Vector s = linalg::svd(test).sigma;
  const double lo = 1.0 - eps / 3.0;
  const double hi = 1.0 + eps / 3.0;
  return s.minCoeff() >= lo && s.maxCoeff() <= hi;
}

std::pair<std::size_t, int> select_embedding(
    const std::vector<EmbeddingCandidate>& candidates, double eps,
    std::uint64_t seed) {
  const std::size_t r = candidates.size();
  if (r < 2) throw std::invalid_argument("select_embedding: need at least 2 candidates");
  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(mix_seed(seed, 0x5e1ec7));
  std::shuffle(order.begin(), order.end(), rng);
  int tried = 0;
  for (std::size_t j : order) {
    ++tried;
    int passed = 0;
    for (std::size_t jp = 0; jp < r; ++jp) {
      if (jp == j) continue;
      if (band_test(candidates[j].factors, candidates[jp].factors, eps)) ++passed;
    }
    if (2 * passed >= static_cast<int>(r) - 1) return {j, tried};
  }
  throw BoostFailure("boost_embedding: no candidate agreed with half of its peers");
}

BoostResult boost_embedding(const Matrix& a, double eps, double delta,
                            std::uint64_t seed, Index ell_override) {
  if (!(eps > 0.0 && eps <= 0.5))
    throw std::invalid_argument("boost_embedding: eps out of (0, 1/2]");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("boost_embedding: delta out of (0, 1)");
  if (a.rows() <= a.cols())
    throw std::invalid_argument("boost_embedding: input must have rows > cols");

  const double d = static_cast<double>(a.cols());
  const double candidate_eps = eps / 9.0;
  const Index ell =
      ell_override > 0
          ? ell_override
          : static_cast<Index>(std::ceil(d * d / (candidate_eps * candidate_eps)));
  const int r = std::max(2, static_cast<int>(std::ceil(6.0 * std::log(1.0 / delta))));

  std::vector<EmbeddingCandidate> candidates;
  candidates.reserve(static_cast<std::size_t>(r));
  for (int j = 0; j < r; ++j) {
    EmbeddingCandidate c;
    c.plan = plan_countsketch(a.rows(), ell, mix_seed(seed, static_cast<std::uint64_t>(j)));
    c.embedded = apply_countsketch_compact(c.plan, a);
    c.factors = linalg::svd(c.embedded);
    candidates.push_back(std::move(c));
  }

  auto [chosen, tried] = select_embedding(candidates, eps, seed);
  BoostResult out;
  out.plan = std::move(candidates[chosen].plan);
  out.embedded = std::move(candidates[chosen].embedded);
  out.candidates_tried = tried;
  out.candidate_count = r;
  return out;
}

}  // namespace dispca::sketching
