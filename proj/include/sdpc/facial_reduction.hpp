#pragma once

#include <Eigen/Dense>

#include <optional>

#include "sdpc/context.hpp"
#include "sdpc/linalg.hpp"
#include "sdpc/model.hpp"

namespace sdpc {

/// A dual-form problem with its slacks forced into span(face):
///   c - A^T y in span(face)  <=>  y = y0 + N z  (when consistent),
/// re-expressed over S^r as  sup <b_hat, z> + offset  s.t.  c_hat - A_hat^T z PSD.
struct FaceRestriction {
  Face face;
  bool consistent = true;
  SdpProblem reduced;        // over S^r
  Eigen::VectorXd y0;
  Eigen::MatrixXd null_map;  // N, m x m'
  double offset = 0.0;       // <b, y0>
  /// When inconsistent: x orthogonal to the face with <c,x> = -1 and A x = 0.
  SymMatrix infeasibility_direction;

  /// W-constraint data, kept for lifting directions.
  Eigen::MatrixXd w_basis;   // columns svec(E_k)
  Eigen::MatrixXd w_map;     // M_{k,i} = <E_k, A_i>

  Eigen::VectorXd map_y(const Eigen::VectorXd& z) const { return y0 + null_map * z; }
  /// x in S^r with A_hat x = 0  ->  X in S^n with A X = 0, X in face*, <c,X> = <c_hat,x>.
  SymMatrix lift_direction(const SymMatrix& x_hat, const SdpProblem& original) const;
};

FaceRestriction restrict_to_face(const SdpProblem& p, const Face& face, const ToleranceConfig& tol);

struct StepOutcome {
  enum class Kind { MinimalFace, Infeasible, SmallerFace };
  Kind kind = Kind::MinimalFace;
  double t_star = 0.0;
  double c_dot = 0.0;          // <c_hat, x*> before normalization
  SymMatrix direction;          // reduced coordinates; <c_hat,.> = -1 (Infeasible) or trace 1
  Eigen::VectorXd z;            // MinimalFace: reduced point with positive definite slack
  int direction_rank = 0;       // SmallerFace
  OrthogonalMatrix rotation;    // SmallerFace: first direction_rank columns span range(direction)
  bool low_confidence = false;
};

/// One facial reduction step on a dual-form problem over the full cone S^r,
/// using the auxiliary pair with interior points I = I* = identity.
StepOutcome fr_step(const SdpProblem& reduced, Context& ctx);

struct FrResult {
  bool feasible = false;
  Face face;                  // minimal face (when feasible)
  FaceRestriction restriction;
  Eigen::VectorXd y_ri;       // slack c - A^T y_ri is in the relative interior of the slack set
  SymMatrix s_ri;
  ReducingChain chain;
  bool low_confidence = false;
};

FrResult facial_reduce(const SdpProblem& p, Context& ctx, ChainSubject subject = ChainSubject::Feasibility,
                       double theta = 0.0);

struct InfeasibilityClass {
  FeasStatus status = FeasStatus::WeakInfeasible;
  std::optional<StrongInfeasibilityWitness> witness;
  /// WeakInfeasible: chain proving the witness system has no PSD solution.
  std::optional<ReducingChain> chain;
  bool contract_violation = false;
};

/// For a dual-form problem already known to be infeasible.
InfeasibilityClass classify_infeasibility(const SdpProblem& p, Context& ctx);

/// Minimum-norm x with <A_i, x> = b_i, or nothing when the residual exceeds
/// tau * (1 + ||b||).
std::optional<SymMatrix> check_linear_feasibility(const LinearMapA& a, const Eigen::VectorXd& b, double tau);

}  // namespace sdpc
