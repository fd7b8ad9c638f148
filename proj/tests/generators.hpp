#pragma once

#include <random>

#include "sdpc/model.hpp"
#include "support.hpp"

namespace sdpc::testing {

/// b = A x0, c = s0 + A^T y0 with x0, s0 positive definite: strongly
/// feasible on both sides.
struct StrictPair {
  SdpProblem problem;
  SymMatrix x0, s0;
  Eigen::VectorXd y0;
};

inline StrictPair strict_pair(std::mt19937& rng, int n, int m) {
  std::vector<SymMatrix> mats;
  for (int i = 0; i < m; ++i) mats.push_back(random_sym(rng, n));
  LinearMapA a(n, mats);
  StrictPair out;
  out.x0 = random_pd(rng, n);
  out.s0 = random_pd(rng, n);
  out.y0 = gaussian_vec(rng, m);
  out.problem = SdpProblem(a, a.apply(out.x0), out.s0 + a.adjoint(out.y0));
  return out;
}

/// Complementary optimum: x* = V diag(d) V^T and s* = U diag(e) U^T with
/// V, U complementary blocks of one rotation, so <x*, s*> = 0 and the value
/// is <b, y*> = <c, x*>. Constraint count m <= svec_dim(n).
struct PlantedOptimum {
  SdpProblem problem;
  SymMatrix x_star, s_star;
  Eigen::VectorXd y_star;
  double value = 0.0;
};

inline PlantedOptimum planted_optimum(std::mt19937& rng, int n, int m, int rank_x) {
  const Eigen::MatrixXd q = random_orthogonal(rng, n).dense();
  Eigen::VectorXd dx = Eigen::VectorXd::Zero(n), ds = Eigen::VectorXd::Zero(n);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int i = 0; i < n; ++i) (i < rank_x ? dx(i) : ds(i)) = u(rng);
  PlantedOptimum out;
  out.x_star = SymMatrix(Eigen::MatrixXd(q * dx.asDiagonal() * q.transpose()));
  out.s_star = SymMatrix(Eigen::MatrixXd(q * ds.asDiagonal() * q.transpose()));
  std::vector<SymMatrix> mats;
  for (int i = 0; i < m; ++i) mats.push_back(random_sym(rng, n));
  LinearMapA a(n, mats);
  out.y_star = gaussian_vec(rng, m);
  out.problem = SdpProblem(a, a.apply(out.x_star), out.s_star + a.adjoint(out.y_star));
  out.value = out.problem.b.dot(out.y_star);
  return out;
}

/// Slacks I + y_0 M - y_1 E_11 with the trailing block of M definite, in
/// rotated coordinates: unbounded, with a ray needing completion along E_11.
inline SdpProblem coupled_unbounded(std::mt19937& rng, int n) {
  Eigen::MatrixXd m = gaussian(rng, n, n);
  m = (m + m.transpose()).eval() * 0.5;
  const Eigen::MatrixXd g = gaussian(rng, n - 1, n - 1);
  m.bottomRightCorner(n - 1, n - 1) = g * g.transpose() + Eigen::MatrixXd::Identity(n - 1, n - 1);
  m(0, 0) = 0.0;
  SymMatrix e11(n);
  e11.set(0, 0, 1.0);
  const OrthogonalMatrix q = random_orthogonal(rng, n);
  const OrthogonalMatrix qt = q.transpose();
  std::vector<SymMatrix> mats{rotate(-SymMatrix(m), qt), rotate(e11, qt)};
  return SdpProblem(LinearMapA(n, mats), Eigen::Vector2d(1.0, 0.0), SymMatrix::identity(n));
}

}  // namespace sdpc::testing
