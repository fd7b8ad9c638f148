#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "sdpc/context.hpp"
#include "sdpc/linalg.hpp"
#include "sdpc/model.hpp"

namespace sdpc {

/// One symmetric matrix per block; scalar (LP) variables are 1x1 blocks.
using BlockMatrix = std::vector<SymMatrix>;

double block_inner(const BlockMatrix& a, const BlockMatrix& b);

/// min <c,x> s.t. <a_i,x> = b_i, x PSD blockwise;
/// max <b,y> s.t. c - sum_i a_i y_i PSD blockwise.
struct BlockSdp {
  std::vector<int> sizes;
  std::vector<BlockMatrix> a;
  BlockMatrix c;
  Eigen::VectorXd b;

  int m() const { return static_cast<int>(a.size()); }
  void validate() const;
};

struct BlockSolution {
  BlockMatrix x;
  BlockMatrix s;  // c - A^T y, recomputed from y
  Eigen::VectorXd y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;               // |primal - dual objective|
  double primal_residual = 0.0;   // ||A x - b||
  double min_eig_x = 0.0;
  double min_eig_s = 0.0;
  int iterations = 0;
};

/// Interior point solve of a pair that is strongly feasible on both sides.
/// Throws MaxIterations or IllConditioned when the contract cannot be met:
/// relative gap <= tol.gap * (1 + |value|), ||A x - b|| <= tol.feas * (1 + ||b||),
/// min eigenvalues of x and s >= -tol.feas.
BlockSolution solve_blocks(const BlockSdp& p, Context& ctx, const std::string& kind);

struct OracleSolution {
  SymMatrix x_star;
  Eigen::VectorXd y_star;
  SymMatrix s_star;
  double gap = 0.0;
  double primal_residual = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
};

/// Problem over the full cone (its face field is ignored).
OracleSolution ipo_solve(const SdpProblem& problem, Context& ctx, const std::string& kind = "ipo");

/// Restricts to the face via psi(x) = pi_r(q^T x q), solves, lifts x back.
OracleSolution ipo_solve_on_face(const SdpProblem& problem, Context& ctx,
                                 const std::string& kind = "ipo-face");

/// sqrt(beta) as sup{x : [[1,x],[x,beta]] PSD}.
double ipo_sqrt(double beta, Context& ctx);

}  // namespace sdpc
