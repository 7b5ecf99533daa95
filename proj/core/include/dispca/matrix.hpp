#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace dispca {

/// Dense row-major real matrix, the carrier for data blocks, factor
/// matrices, embeddings and center sets throughout the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline double frobenius_sq(const Matrix& a) { return a.squaredNorm(); }

/// Number of exactly-zero-free entries. Countsketch output sparsity is
/// compared against the input with this exact count, so no tolerance.
inline std::int64_t nnz(const Matrix& a) {
  std::int64_t count = 0;
  for (Index i = 0; i < a.size(); ++i)
    if (a.data()[i] != 0.0) ++count;
  return count;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions differ");
  return a * b;
}

inline Matrix transpose(const Matrix& a) { return a.transpose(); }

}  // namespace dispca
