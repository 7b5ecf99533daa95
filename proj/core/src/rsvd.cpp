#include "dispca/rsvd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dispca/sketching.hpp"

namespace dispca::rsvd {

linalg::SvdFactors randomized_svd(const Matrix& a, const RsvdParams& params) {
  const Index t = params.target_rank_t;
  if (t < 1) throw std::invalid_argument("randomized_svd: target rank must be >= 1");
  if (params.power_iterations_q < 0)
    throw std::invalid_argument("randomized_svd: power iteration count must be >= 0");
  const Index w = 2 * t;
  if (w > std::min(a.rows(), a.cols()))
    throw std::invalid_argument("randomized_svd: 2t exceeds min(rows, cols)");

  const Matrix omega = sketching::gaussian_matrix(a.rows(), w, params.seed);
  Matrix q = linalg::qr_factorize(a.transpose() * omega).q;  // d x 2t
  for (int iter = 0; iter < params.power_iterations_q; ++iter)
    q = linalg::qr_factorize(a.transpose() * (a * q)).q;

  const Matrix b = a * q;  // rows x 2t
  linalg::SvdFactors small = linalg::svd(b);
  linalg::SvdFactors out;
  out.u = small.u;
  out.sigma = small.sigma;
  out.v = q * small.v;
  // Householder QR already fills rank-deficient directions with an
  // orthonormal complement, so out.v has exactly 2t orthonormal columns.
  return out;
}

int default_power_iterations(Index d, Index s, Index k, double eps) {
  const double a = std::log(static_cast<double>(d) / eps);
  const double b = std::log(static_cast<double>(s) * static_cast<double>(k) / eps);
  return std::max(1, static_cast<int>(std::ceil(std::max(a, b))));
}

}  // namespace dispca::rsvd
