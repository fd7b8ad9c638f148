#include "sdpc/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdpc/error.hpp"
#include "sdpc/facial_reduction.hpp"

namespace sdpc {

namespace {

/// Size of the k smallest slack eigenvalues together with the objective miss.
double face_miss(const SdpProblem& p, const Eigen::VectorXd& y, double theta, int k) {
  const EigenDecomposition ed = eig_sym(p.slack(y));
  return std::max(ed.values.tail(k).cwiseAbs().maxCoeff(), std::abs(p.b.dot(y) - theta));
}

/// Newton steps on y that make the k smallest slack eigenvalues vanish at
/// objective theta; the optimal face found by facial reduction is only
/// accurate to the square root of the oracle tolerance.
Eigen::VectorXd polish_optimal(const SdpProblem& p, Eigen::VectorXd y, double theta, int k) {
  const int n = p.n();
  const int m = p.m();
  if (k <= 0 || k >= n || m == 0) return y;
  double best = face_miss(p, y, theta, k);
  for (int it = 0; it < 5 && best > 0.0; ++it) {
    const Eigen::MatrixXd v = eig_sym(p.slack(y)).vectors.dense().rightCols(k);
    const int eqs = svec_dim(k);
    Eigen::MatrixXd jac(eqs + 1, m);
    Eigen::VectorXd rhs(eqs + 1);
    for (int i = 0; i < m; ++i) jac.block(0, i, eqs, 1) = svec(congruence(p.a[i], v));
    rhs.head(eqs) = svec(congruence(p.slack(y), v));
    jac.row(eqs) = p.b.transpose();
    rhs(eqs) = theta - p.b.dot(y);
    const Eigen::VectorXd next = y + jac.completeOrthogonalDecomposition().solve(rhs);
    const double miss = face_miss(p, next, theta, k);
    if (!(miss < best)) break;
    best = miss;
    y = next;
  }
  return y;
}

}  // namespace

AttainmentResult attainment_check(const SdpProblem& p, double theta, Context& ctx) {
  p.validate();
  const ToleranceConfig& tol = ctx.tol();
  AttainmentResult out;
  const AffineSlackSystem sys = build_slack_system(p, ChainSubject::OptimalSet, theta, tol);
  if (!sys.consistent) {
    out.contract_violation = true;
    ctx.diagnose("attainment_check: b = 0 with a nonzero value");
    return out;
  }
  const SdpProblem w(LinearMapA(p.n(), sys.span), Eigen::VectorXd::Zero(sys.span.size()), sys.c);
  const FrResult fr = facial_reduce(w, ctx, ChainSubject::OptimalSet, theta);
  if (!fr.feasible) {
    out.chain = fr.chain;
    const InfeasibilityClass cls = classify_infeasibility(w, ctx);
    if (cls.status == FeasStatus::StrongInfeasible) {
      out.contract_violation = true;
      ctx.diagnose("attainment_check: the optimal-set system looks strongly infeasible");
    }
    return out;
  }
  out.attained = true;
  out.slack = fr.s_ri;
  out.rank = fr.face.rank();

  const int m = p.m();
  const int d = svec_dim(p.n());
  Eigen::MatrixXd rows(d + 1, m);
  rows.topRows(d) = p.a.svec_matrix();
  rows.row(d) = p.b.transpose();
  Eigen::VectorXd rhs(d + 1);
  rhs.head(d) = svec(p.c - out.slack);
  rhs(d) = theta;
  const LeastSquares ls = least_squares(rows, rhs, 1e-12);
  out.y = ls.x;
  if (ls.residual > tol.branch * (1.0 + rhs.norm())) {
    out.contract_violation = true;
    std::ostringstream os;
    os << "attainment_check: optimal slack does not match a y (residual " << ls.residual << ")";
    ctx.diagnose(os.str());
    return out;
  }
  out.y = polish_optimal(p, out.y, theta, p.n() - out.rank);
  out.slack = p.slack(out.y);
  return out;
}

Eigen::VectorXd interior_small_point(const Valuation& v, Context& ctx) {
  if (v.small.n() == 0) return Eigen::VectorXd::Zero(v.small.m());
  const StepOutcome step = fr_step(v.small, ctx);
  if (step.kind != StepOutcome::Kind::MinimalFace) {
    fail(ErrorKind::ContractViolation, "interior_small_point: cut problem is not strongly feasible");
  }
  return step.z;
}

Eigen::VectorXd epsilon_optimal(const NormalizedObjective& norm, const Valuation& v, const Eigen::VectorXd& y_hat,
                                double epsilon, const ToleranceConfig& tol) {
  if (!(epsilon > 0.0)) fail(ErrorKind::Precondition, "epsilon_optimal: epsilon must be positive");
  if (!v.small_solution) fail(ErrorKind::Precondition, "epsilon_optimal: no optimal point of the cut problem");
  const Eigen::VectorXd& y_star = v.small_solution->y_star;
  const int ns = v.small.n();
  const auto definite = [&](const Eigen::VectorXd& w) {
    const SymMatrix z = v.small.slack(w);
    return ns == 0 || (min_eigenvalue(z) > 0.0 && numeric_rank(z, tol) == ns);
  };
  if (!definite(y_hat)) fail(ErrorKind::Precondition, "epsilon_optimal: y_hat is not interior");

  const double gap = y_star(0) - y_hat(0);
  double lo = 0.0;
  double gamma = 0.0;
  if (gap > 0.0) {
    lo = std::max(0.0, (gap - epsilon) / gap);
    gamma = std::min(lo + 0.1 * (1.0 - lo), 1.0 - 1e-9);
  }
  Eigen::VectorXd w = (1.0 - gamma) * y_hat + gamma * y_star;
  for (int it = 0; it < 60 && !definite(w); ++it) {
    gamma = 0.5 * (gamma + lo);
    w = (1.0 - gamma) * y_hat + gamma * y_star;
  }
  if (!definite(w)) {
    gamma = lo;
    w = (1.0 - gamma) * y_hat + gamma * y_star;
  }
  if (v.partition) {
    const Eigen::VectorXd alpha = psd_complete(rotated_slack(norm.ref, v, w), *v.partition, tol);
    w.tail(w.size() - 1) -= v.partition->coef * alpha;
  }
  return norm.to_original(w);
}

}  // namespace sdpc
