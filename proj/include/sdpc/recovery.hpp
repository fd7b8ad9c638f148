#pragma once

#include <Eigen/Dense>

#include <optional>

#include "sdpc/context.hpp"
#include "sdpc/model.hpp"
#include "sdpc/valuation.hpp"

namespace sdpc {

struct AttainmentResult {
  bool attained = false;
  Eigen::VectorXd y;  // attained: optimal y whose slack has maximal rank
  SymMatrix slack;
  int rank = 0;
  /// Unattained: facial reduction chain proving the optimal set is empty.
  std::optional<ReducingChain> chain;
  bool contract_violation = false;
};

/// Decides whether {c - A^T y PSD, <b,y> = theta} is nonempty for a
/// dual-form problem over the full cone.
AttainmentResult attainment_check(const SdpProblem& p, double theta, Context& ctx);

/// Point of the cut problem with positive definite slack (one reduction step).
Eigen::VectorXd interior_small_point(const Valuation& v, Context& ctx);

/// y in the coordinates of the problem `norm` was built from, feasible, with
/// <b,y> >= theta - epsilon. y_hat comes from interior_small_point.
Eigen::VectorXd epsilon_optimal(const NormalizedObjective& norm, const Valuation& v, const Eigen::VectorXd& y_hat,
                                double epsilon, const ToleranceConfig& tol);

}  // namespace sdpc
