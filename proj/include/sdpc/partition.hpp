#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "sdpc/context.hpp"
#include "sdpc/linalg.hpp"

namespace sdpc {

/// dirs[i] = P^T (sum_j coef(j, i) B_j) P for the spanning set B_j the
/// partition was built from. In the rotated coordinates, dirs[i] restricted
/// to rows/columns >= k_1 + ... + k_{i-1} is diag(PD block of size k_i, 0).
struct HyperFeasiblePartition {
  OrthogonalMatrix p;
  std::vector<SymMatrix> dirs;
  std::vector<int> blocks;
  Eigen::MatrixXd coef;
  int s = 0;

  int size() const { return static_cast<int>(dirs.size()); }
  int offset(int i) const;  // k_1 + ... + k_i (i = 0 gives 0)
};

struct NonzeroPsd {
  SymMatrix element;     // trace one, PSD, in span(mats)
  Eigen::VectorXd beta;  // element = sum_j beta_j mats_j
  double t_star = 0.0;
};

/// A nonzero PSD element of span(mats), or nothing when the span meets the
/// cone only at zero.
std::optional<NonzeroPsd> find_nonzero_psd(const std::vector<SymMatrix>& mats, int n, Context& ctx);

/// Maximal hyper feasible partition of span(mats); nothing when the span
/// contains no nonzero PSD matrix.
std::optional<HyperFeasiblePartition> build_partition(const std::vector<SymMatrix>& mats, int n, Context& ctx);

/// alpha > 0 with z + sum alpha_i dirs_i positive definite; z in the
/// partition's rotated coordinates with pi_lower(z, s) positive definite.
Eigen::VectorXd psd_complete(const SymMatrix& z, const HyperFeasiblePartition& part, const ToleranceConfig& tol);

struct NearFeasible {
  SymMatrix z_tilde;
  Eigen::VectorXd alpha;
};

/// z_tilde = z + sum alpha_i dirs_i with dist_to_psd(z_tilde) <= epsilon;
/// z in rotated coordinates with pi_lower(z, s) PSD. epsilon = 0 requires
/// pi_lower(z, s) positive definite.
NearFeasible epsilon_near_feasible(const SymMatrix& z, const HyperFeasiblePartition& part, double epsilon,
                                   Context& ctx);

}  // namespace sdpc
