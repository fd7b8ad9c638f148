#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "sdpc/linalg.hpp"

namespace sdpc::testing {

inline Eigen::MatrixXd gaussian(std::mt19937& rng, int rows, int cols) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = d(rng);
  return m;
}

inline Eigen::VectorXd gaussian_vec(std::mt19937& rng, int n) {
  return gaussian(rng, n, 1).col(0);
}

inline SymMatrix random_sym(std::mt19937& rng, int n) {
  return SymMatrix(gaussian(rng, n, n));
}

inline OrthogonalMatrix random_orthogonal(std::mt19937& rng, int n) {
  return OrthogonalMatrix::orthonormalized(gaussian(rng, n, n));
}

/// v v^T with v n x r gaussian; rank r almost surely.
inline SymMatrix random_psd(std::mt19937& rng, int n, int r) {
  const Eigen::MatrixXd v = gaussian(rng, n, r);
  return SymMatrix(Eigen::MatrixXd(v * v.transpose()));
}

/// Positive definite with eigenvalues in [lo, hi].
inline SymMatrix random_pd(std::mt19937& rng, int n, double lo = 0.5, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = u(rng);
  const Eigen::MatrixXd q = random_orthogonal(rng, n).dense();
  return SymMatrix(Eigen::MatrixXd(q * d.asDiagonal() * q.transpose()));
}

inline int uniform_int(std::mt19937& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace sdpc::testing
