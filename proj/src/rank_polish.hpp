#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "sdpc/linalg.hpp"
#include "sdpc/tolerance.hpp"

namespace sdpc {

SymMatrix combination(const std::vector<SymMatrix>& mats, const Eigen::VectorXd& beta, int n);

struct Polished {
  Eigen::VectorXd beta;
  EigenDecomposition ed;
};

/// beta near beta0 with sum beta M of rank exactly k: the trailing p - k
/// eigenvalues are driven to zero by Newton steps in the current eigenbasis,
/// where the off-diagonal block already vanishes. Fails when the iteration
/// stalls or the k-th eigenvalue collapses, meaning rank k is not attainable.
/// An indefinite A + eps B near a genuine face stalls at a trailing
/// eigenvalue of order eps^2, so convergence must reach roundoff. `stall` is
/// the largest accepted ratio between successive trailing norms; tangential
/// solution sets converge linearly and need a ratio near one.
std::optional<Polished> polish_rank(const std::vector<SymMatrix>& mats, const Eigen::VectorXd& beta0, int k, int p,
                                    const ToleranceConfig& tol, double stall = 0.5);

}  // namespace sdpc
