#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sdpc/linalg.hpp"
#include "sdpc/tolerance.hpp"

namespace sdpc {

/// A_1..A_m acting as (A x)_i = <A_i, x>, adjoint A^T y = sum_i A_i y_i.
class LinearMapA {
 public:
  LinearMapA() = default;
  LinearMapA(int n, std::vector<SymMatrix> mats);

  int n() const { return n_; }
  int m() const { return static_cast<int>(mats_.size()); }
  const std::vector<SymMatrix>& mats() const { return mats_; }
  const SymMatrix& operator[](int i) const { return mats_[i]; }

  Eigen::VectorXd apply(const SymMatrix& x) const;
  SymMatrix adjoint(const Eigen::VectorXd& y) const;
  /// Columns svec(A_i); svec_dim(n) x m.
  Eigen::MatrixXd svec_matrix() const;
  /// A_i -> v^T A_i v for a rectangular v.
  LinearMapA congruence(const Eigen::MatrixXd& v) const;
  /// A_i -> pi_lower(A_i, r).
  LinearMapA lower(int r) const;
  /// New map with mats B_j = sum_i A_i coeff(i, j).
  LinearMapA combine(const Eigen::MatrixXd& coeff) const;

 private:
  int n_ = 0;
  std::vector<SymMatrix> mats_;
};

/// Face {q diag(a, 0) q^T : a in S^r_+} of S^n_+.
class Face {
 public:
  Face() = default;
  Face(OrthogonalMatrix q, int r);

  static Face full(int n);

  int n() const { return q_.n(); }
  int rank() const { return r_; }
  const OrthogonalMatrix& q() const { return q_; }
  /// n x r orthonormal basis of the face's column space.
  Eigen::MatrixXd basis() const { return q_.leading(r_); }
  bool is_full() const { return r_ == n(); }

  /// psi(x) = pi_r(q^T x q).
  SymMatrix restrict_to(const SymMatrix& x) const;
  /// q diag(x_hat, 0) q^T.
  SymMatrix lift(const SymMatrix& x_hat) const;
  /// q diag(I_r, 0) q^T, a relative interior point of both F and F*.
  SymMatrix interior_point() const;

  bool contains(const SymMatrix& x, const ToleranceConfig& tol) const;
  bool dual_contains(const SymMatrix& x, const ToleranceConfig& tol) const;

 private:
  OrthogonalMatrix q_;
  int r_ = 0;
};

enum class Orientation { Dual, Primal };

/// Data (A, b, c) over a face. In dual orientation the problem read is
///   sup <b,y>  s.t.  c - A^T y in face*,
/// whose Lagrangian partner is inf <c,x> s.t. A x = b, x in face.
struct SdpProblem {
  LinearMapA a;
  Eigen::VectorXd b;
  SymMatrix c;
  Face face;
  Orientation orientation = Orientation::Dual;

  SdpProblem() = default;
  SdpProblem(LinearMapA a, Eigen::VectorXd b, SymMatrix c,
             Orientation orientation = Orientation::Dual);

  int n() const { return c.n(); }
  int m() const { return a.m(); }
  SymMatrix slack(const Eigen::VectorXd& y) const { return c - a.adjoint(y); }
  /// Throws DimensionMismatch if the pieces disagree.
  void validate() const;
};

/// Primal-form data rewritten in dual form by parametrizing {x : A x = b}
/// as x0 + span{B_j}: c' = x0, A'_j = -B_j, b'_j = -<c, B_j>, so that
/// x = c' - A'^T w and <c, x> = offset - <b', w>.
struct PrimalConversion {
  bool consistent = true;
  SdpProblem dual;
  double offset = 0.0;
  /// When A x = b has no solution: y with <b,y> = 1 and A^T y = 0.
  Eigen::VectorXd infeasibility_y;
};

PrimalConversion primal_to_dual_form(const SdpProblem& primal, const ToleranceConfig& tol);

enum class FeasStatus { StrongFeasible, WeakFeasible, WeakInfeasible, StrongInfeasible };

const char* to_string(FeasStatus s);
FeasStatus feas_status_from_string(const std::string& s);
inline bool is_feasible(FeasStatus s) {
  return s == FeasStatus::StrongFeasible || s == FeasStatus::WeakFeasible;
}

/// -inf, a finite real, or +inf.
class ExtendedReal {
 public:
  enum class Kind { NegInf, Finite, PosInf };

  static ExtendedReal finite(double v) { return ExtendedReal(Kind::Finite, v); }
  static ExtendedReal pos_inf() { return ExtendedReal(Kind::PosInf, 0.0); }
  static ExtendedReal neg_inf() { return ExtendedReal(Kind::NegInf, 0.0); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  /// Only meaningful when finite.
  double value() const { return value_; }
  ExtendedReal negated() const;
  std::string to_string() const;

  friend bool operator==(const ExtendedReal&, const ExtendedReal&) = default;

 private:
  ExtendedReal(Kind k, double v) : kind_(k), value_(v) {}
  Kind kind_ = Kind::Finite;
  double value_ = 0.0;
};

enum class Attainment { Yes, No, NotApplicable };
const char* to_string(Attainment a);

/// Which affine slack system a reducing chain refers to. All systems are
/// derived from a dual-form problem (A, b, c):
///   Feasibility:     c - span{A_i}
///   OptimalSet:      {c - A^T y : <b,y> = theta}
///   WitnessSystem:   {x : <c,x> = -1, A x = 0}
enum class ChainSubject { Feasibility, OptimalSet, WitnessSystem };
const char* to_string(ChainSubject s);
ChainSubject chain_subject_from_string(const std::string& s);

/// Dual-form feasibility system: find y with c - sum_j span_j y_j PSD.
struct AffineSlackSystem {
  SymMatrix c;
  std::vector<SymMatrix> span;
  bool consistent = true;  // false when the defining linear system has no solution
};

AffineSlackSystem build_slack_system(const SdpProblem& dual_form, ChainSubject subject,
                                     double theta, const ToleranceConfig& tol);

struct ReducingStep {
  SymMatrix direction;          // in original n x n coordinates
  Face before;
  std::optional<Face> after;    // empty when this step proves infeasibility
  double c_dot = 0.0;           // <c_system, direction>
  bool low_confidence = false;  // branch decided within 10x of the threshold
};

struct ReducingChain {
  enum class Terminal { MinimalFaceFound, InfeasibleDetected };
  ChainSubject subject = ChainSubject::Feasibility;
  double theta = 0.0;  // OptimalSet only
  std::vector<ReducingStep> steps;
  Terminal terminal = Terminal::MinimalFaceFound;
};

/// Primal side: y with <b,y> = 1 and -A^T y PSD (primal strongly infeasible).
/// Dual side: x with <c,x> = -1, A x = 0, x PSD (dual strongly infeasible).
struct StrongInfeasibilityWitness {
  enum class Side { Primal, Dual };
  Side side = Side::Dual;
  Eigen::VectorXd y;
  SymMatrix x;
};

using Certificate = std::variant<ReducingChain, StrongInfeasibilityWitness>;

struct Residual {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool ok() const { return value <= limit; }
};

struct VerificationReport {
  bool ok = true;
  std::vector<Residual> residuals;
  void add(std::string name, double value, double limit);
};

/// Checks every defining equality/inequality of the certificate against the
/// problem data. Chains are checked against the dual-form working problem
/// (primal-orientation problems are converted first).
VerificationReport verify_certificate(const SdpProblem& problem, const Certificate& cert,
                                      const ToleranceConfig& tol);

/// Absolute limit used by verify_certificate for quantities of size `scale`.
double certificate_tolerance(const ToleranceConfig& tol, double scale);

struct Solution {
  std::optional<Eigen::VectorXd> y;  // dual orientation
  SymMatrix matrix;                  // slack (dual) or x (primal)
  double objective = 0.0;
  int rank = 0;
};

struct EpsilonPoint {
  enum class Kind { Optimal, NearFeasible };
  Kind kind = Kind::Optimal;
  double epsilon = 0.0;
  std::optional<Eigen::VectorXd> y;
  SymMatrix matrix;  // slack (dual) or x (primal)
  std::optional<double> objective;
  double dist_to_psd = 0.0;
};

class Context;

/// Produces epsilon-optimal or epsilon-near-feasible points on demand.
class EpsilonGenerator {
 public:
  virtual ~EpsilonGenerator() = default;
  virtual EpsilonPoint point(double epsilon, Context& ctx) const = 0;
};

struct PartitionSummary {
  std::vector<int> blocks;
  int s = 0;
};

struct TraceEntry {
  std::string kind;
  int n = 0;   // total cone dimension (sum of block sizes)
  int m = 0;   // constraints after presolve
  int iterations = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  bool ok = true;
};

struct SolveReport {
  Orientation orientation = Orientation::Dual;
  FeasStatus status = FeasStatus::StrongFeasible;
  ExtendedReal value = ExtendedReal::finite(0.0);
  Attainment attained = Attainment::NotApplicable;
  std::optional<Solution> solution;
  std::vector<Certificate> certificates;
  std::optional<PartitionSummary> partition;
  std::shared_ptr<const EpsilonGenerator> epsilon_handle;
  std::vector<EpsilonPoint> epsilon_points;
  std::vector<std::string> diagnostics;
  bool contract_violation = false;
  int oracle_calls = 0;
  std::vector<TraceEntry> trace;
  ToleranceConfig config;

  /// attained == Yes needs a solution; infeasible status needs value -inf
  /// (dual) / +inf (primal). Returns the violated rules, empty when consistent.
  std::vector<std::string> consistency_errors() const;
};

}  // namespace sdpc
