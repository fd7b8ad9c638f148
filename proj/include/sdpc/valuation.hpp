#pragma once

#include <Eigen/Dense>

#include <optional>

#include "sdpc/context.hpp"
#include "sdpc/model.hpp"
#include "sdpc/oracle.hpp"
#include "sdpc/partition.hpp"

namespace sdpc {

/// The problem rewritten to maximize its first variable. With pivot j the
/// new variables are w = (y_0, y_i for i != j) where y_0 = <b, y>, and the
/// constraint matrices become A_j / b_j followed by A_i - (b_i / b_j) A_j.
struct NormalizedObjective {
  SdpProblem ref;
  int pivot = 0;
  Eigen::VectorXd b;

  Eigen::VectorXd to_original(const Eigen::VectorXd& w) const;
  Eigen::VectorXd from_original(const Eigen::VectorXd& y) const;
};

/// Throws Precondition when b = 0.
NormalizedObjective normalize_objective(const SdpProblem& p);

struct Valuation {
  enum class Branch { Finite, LinearInfeasible, ImprovingRay };
  Branch branch = Branch::Finite;
  ExtendedReal theta = ExtendedReal::finite(0.0);

  std::optional<HyperFeasiblePartition> partition;  // of span{A_2, ..., A_m} of the reference problem
  int s = 0;
  /// Reference problem rotated by the partition's P and cut down to the
  /// trailing (n - s) block; same variables, objective e_0.
  SdpProblem small;
  std::optional<OracleSolution> small_solution;

  /// Unbounded branches: ray_0 = 1 and the cut slack direction
  /// -pi_lower(P^T A^T ray P, s) is PSD (zero for LinearInfeasible).
  Eigen::VectorXd ray;
  /// A ray of the uncut reference problem (-A^T ray PSD), when one could be
  /// completed from `ray`.
  std::optional<Eigen::VectorXd> full_ray;
};

/// Optimal value of a strongly feasible reference problem (objective e_0).
Valuation reduce_and_value(const SdpProblem& ref, Context& ctx);

/// Slack of the reference problem in the partition's rotated coordinates.
SymMatrix rotated_slack(const SdpProblem& ref, const Valuation& v, const Eigen::VectorXd& w);

}  // namespace sdpc
