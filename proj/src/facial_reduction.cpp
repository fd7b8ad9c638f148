#include "sdpc/facial_reduction.hpp"

#include <cmath>
#include <sstream>

#include "sdpc/error.hpp"
#include "sdpc/oracle.hpp"
#include "rank_polish.hpp"

namespace sdpc {

namespace {

Eigen::MatrixXd svec_rows(const std::vector<SymMatrix>& mats, int n) {
  Eigen::MatrixXd rows(mats.size(), svec_dim(n));
  for (std::size_t i = 0; i < mats.size(); ++i) rows.row(i) = svec(mats[i]).transpose();
  return rows;
}

/// Smallest-norm change of x making <a_j, x> = 0 for all j.
SymMatrix project_onto_kernel(const SymMatrix& x, const std::vector<SymMatrix>& mats) {
  if (mats.empty()) return x;
  const Eigen::MatrixXd rows = svec_rows(mats, x.n());
  const Eigen::VectorXd v = svec(x);
  const LeastSquares ls = least_squares(rows, rows * v, 1e-12);
  return smat(v - ls.x, x.n());
}

bool near_threshold(double v, double tau) { return std::abs(v) > 0.1 * tau && std::abs(v) < 10.0 * tau; }

}  // namespace

namespace {

/// Moves the relative interior point to a slack of exact rank r and rebuilds
/// the face and restriction from its range.
void sharpen(const SdpProblem& p, FrResult& res, const ToleranceConfig& tol) {
  const int n = p.n();
  const int r = res.face.rank();
  std::vector<SymMatrix> mats{p.c};
  for (const auto& a : p.a.mats()) mats.push_back(-a);
  Eigen::VectorXd beta(p.m() + 1);
  beta << 1.0, res.y_ri;
  const auto pol = polish_rank(mats, beta, r, n, tol, 0.9);
  if (!pol || !(pol->beta(0) > 0.5)) return;
  const Eigen::VectorXd y = pol->beta.tail(p.m()) / pol->beta(0);
  const SymMatrix s = p.slack(y);
  const EigenDecomposition ed = eig_sym(s);
  const Face face(ed.vectors, r);
  FaceRestriction fr = restrict_to_face(p, face, tol);
  if (!fr.consistent) return;
  res.face = face;
  res.y_ri = y;
  res.s_ri = s;
  res.restriction = std::move(fr);
}

}  // namespace

FaceRestriction restrict_to_face(const SdpProblem& p, const Face& face, const ToleranceConfig& tol) {
  const int n = p.n();
  const int r = face.rank();
  const int m = p.m();
  FaceRestriction out;
  out.face = face;
  if (r == n) {
    out.reduced = SdpProblem(p.a.congruence(face.q().dense()), p.b, rotate(p.c, face.q()));
    out.y0 = Eigen::VectorXd::Zero(m);
    out.null_map = Eigen::MatrixXd::Identity(m, m);
    out.w_basis = Eigen::MatrixXd(svec_dim(n), 0);
    out.w_map = Eigen::MatrixXd(0, m);
    return out;
  }
  const Eigen::MatrixXd& q = face.q().dense();
  std::vector<Eigen::VectorXd> cols;
  for (int j = r; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      Eigen::MatrixXd e;
      if (i == j) {
        e = q.col(j) * q.col(j).transpose();
      } else {
        e = (q.col(i) * q.col(j).transpose() + q.col(j) * q.col(i).transpose()) / std::sqrt(2.0);
      }
      cols.push_back(svec(SymMatrix(e)));
    }
  }
  out.w_basis.resize(svec_dim(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.w_basis.col(k) = cols[k];
  out.w_map = out.w_basis.transpose() * p.a.svec_matrix();
  const Eigen::VectorXd g = out.w_basis.transpose() * svec(p.c);
  // Oracle-derived faces are accurate to about sqrt(tol.face).
  const LeastSquares ls = least_squares(out.w_map, g, tol.sub);
  if (ls.residual > std::sqrt(tol.face) * (1.0 + g.norm())) {
    out.consistent = false;
    const Eigen::VectorXd res = g - out.w_map * ls.x;
    out.infeasibility_direction = smat(out.w_basis * res, n) * (-1.0 / g.dot(res));
    return out;
  }
  out.y0 = ls.x;
  out.null_map = ls.null_basis;
  out.offset = p.b.dot(out.y0);
  const Eigen::MatrixXd qr = face.basis();
  const LinearMapA combined = p.a.combine(out.null_map);
  out.reduced = SdpProblem(combined.congruence(qr), out.null_map.transpose() * p.b,
                           congruence(p.slack(out.y0), qr));
  return out;
}

SymMatrix FaceRestriction::lift_direction(const SymMatrix& x_hat, const SdpProblem& original) const {
  const SymMatrix x0 = face.lift(x_hat);
  if (w_basis.cols() == 0) return x0;
  const Eigen::VectorXd rhs = -original.a.apply(x0);
  const LeastSquares ls = least_squares(w_map.transpose(), rhs, 1e-12);
  return x0 + smat(w_basis * ls.x, x0.n());
}

StepOutcome fr_step(const SdpProblem& reduced, Context& ctx) {
  const ToleranceConfig& tol = ctx.tol();
  const int r = reduced.n();
  if (r == 0) fail(ErrorKind::Precondition, "fr_step: zero-dimensional face");
  const SymMatrix& c = reduced.c;
  const int m = reduced.m();

  // Variables (x, t, w) in S^r x R_+ x R_+.
  BlockSdp aux;
  aux.sizes = {r, 1, 1};
  aux.c = {SymMatrix(r), SymMatrix::diagonal({1.0}), SymMatrix(1)};
  aux.b = Eigen::VectorXd::Zero(m + 2);
  aux.a.push_back({-c, SymMatrix::diagonal({c.trace() + 1.0}), SymMatrix::diagonal({-1.0})});
  aux.a.push_back({SymMatrix::identity(r), SymMatrix(1), SymMatrix::diagonal({1.0})});
  aux.b(1) = 1.0;
  for (int j = 0; j < m; ++j) {
    aux.a.push_back({reduced.a[j], SymMatrix::diagonal({-reduced.a[j].trace()}), SymMatrix(1)});
  }
  const BlockSolution sol = solve_blocks(aux, ctx, "facial-reduction");

  StepOutcome out;
  out.t_star = sol.x[1](0, 0);
  const SymMatrix& xs = sol.x[0];
  if (out.t_star > tol.branch) {
    out.kind = StepOutcome::Kind::MinimalFace;
    out.low_confidence = near_threshold(out.t_star, tol.branch);
    const double y1 = sol.y(0);
    if (!(y1 > 0.0)) fail(ErrorKind::ContractViolation, "fr_step: nonpositive multiplier on the normalization row");
    out.z = sol.y.tail(m) / y1;
    return out;
  }
  out.c_dot = trace_inner(c, xs);
  if (out.c_dot < -tol.branch) {
    out.kind = StepOutcome::Kind::Infeasible;
    out.low_confidence = near_threshold(out.t_star, tol.branch) || near_threshold(out.c_dot, tol.branch);
    const SymMatrix x = project_onto_kernel(xs, reduced.a.mats());
    out.direction = x * (-1.0 / trace_inner(c, x));
    return out;
  }
  out.kind = StepOutcome::Kind::SmallerFace;
  out.low_confidence = near_threshold(out.t_star, tol.branch) || near_threshold(out.c_dot, tol.branch);
  EigenDecomposition ed = eig_sym(xs);
  int k = numeric_rank(xs, tol.for_oracle_output());
  if (k == 0) k = 1;
  out.direction_rank = k;

  // Sharpen the range of x* to an exact rank-k element of {A x = 0, <c,x> = 0}.
  if (k < r) {
    Eigen::MatrixXd rows(m + 1, svec_dim(r));
    for (int j = 0; j < m; ++j) rows.row(j) = svec(reduced.a[j]).transpose();
    rows.row(m) = svec(c).transpose();
    const Eigen::MatrixXd kb = least_squares(rows, Eigen::VectorXd::Zero(m + 1), tol.sub).null_basis;
    if (kb.cols() > 0) {
      std::vector<SymMatrix> kmats;
      for (int j = 0; j < kb.cols(); ++j) kmats.push_back(smat(kb.col(j), r));
      if (auto pol = polish_rank(kmats, kb.transpose() * svec(xs), k, r, tol)) ed = pol->ed;
    }
  }
  out.rotation = ed.vectors;

  // Keep the direction inside its leading eigenspace and make A x = 0,
  // <c,x> = 0 hold to working precision there.
  const Eigen::MatrixXd uk = ed.vectors.leading(k);
  const SymMatrix y0 = SymMatrix::diagonal(std::span<const double>(ed.values.data(), k));
  std::vector<SymMatrix> cons;
  for (const auto& a : reduced.a.mats()) cons.push_back(congruence(a, uk));
  cons.push_back(congruence(c, uk));
  SymMatrix y = project_onto_kernel(y0, cons);
  if (min_eigenvalue(y) <= 0.0) y = y0;
  out.direction = expand(y, uk) * (1.0 / y.trace());
  return out;
}

FrResult facial_reduce(const SdpProblem& p, Context& ctx, ChainSubject subject, double theta) {
  p.validate();
  const ToleranceConfig& tol = ctx.tol();
  const int n = p.n();
  if (n == 0) fail(ErrorKind::Precondition, "facial_reduce: zero-dimensional problem");
  FrResult res;
  res.chain.subject = subject;
  res.chain.theta = theta;
  Face face = Face::full(n);
  for (int iter = 0; iter <= n; ++iter) {
    FaceRestriction fr = restrict_to_face(p, face, tol);
    if (!fr.consistent) {
      ReducingStep st;
      st.direction = fr.infeasibility_direction;
      st.before = face;
      st.c_dot = trace_inner(p.c, st.direction);
      res.chain.steps.push_back(st);
      res.chain.terminal = ReducingChain::Terminal::InfeasibleDetected;
      return res;
    }
    if (face.rank() == 0) {
      res.feasible = true;
      res.face = face;
      res.y_ri = fr.y0;
      res.s_ri = p.slack(res.y_ri);
      res.restriction = std::move(fr);
      return res;
    }
    const StepOutcome step = fr_step(fr.reduced, ctx);
    if (step.low_confidence) {
      res.low_confidence = true;
      std::ostringstream os;
      os << "facial reduction step " << iter + 1 << " decided near the branch threshold (t* = " << step.t_star
         << ", <c,x*> = " << step.c_dot << ")";
      ctx.diagnose(os.str());
    }
    if (step.kind == StepOutcome::Kind::MinimalFace) {
      res.feasible = true;
      res.face = face;
      res.y_ri = fr.map_y(step.z);
      res.s_ri = p.slack(res.y_ri);
      res.restriction = std::move(fr);
      if (face.rank() < n) sharpen(p, res, tol);
      return res;
    }
    ReducingStep st;
    st.direction = fr.lift_direction(step.direction, p);
    st.before = face;
    st.c_dot = trace_inner(p.c, st.direction);
    st.low_confidence = step.low_confidence;
    if (step.kind == StepOutcome::Kind::Infeasible) {
      res.chain.steps.push_back(st);
      res.chain.terminal = ReducingChain::Terminal::InfeasibleDetected;
      return res;
    }
    const int r = face.rank();
    const int k = step.direction_rank;
    const Eigen::MatrixXd qr = face.basis();
    const Eigen::MatrixXd& u = step.rotation.dense();
    Eigen::MatrixXd nq(n, n);
    nq << qr * u.rightCols(r - k), qr * u.leftCols(k), face.q().trailing(r);
    face = Face(OrthogonalMatrix::orthonormalized(nq), r - k);
    st.after = face;
    res.chain.steps.push_back(st);
  }
  fail(ErrorKind::ContractViolation, "facial_reduce: more than n reduction steps");
}

InfeasibilityClass classify_infeasibility(const SdpProblem& p, Context& ctx) {
  InfeasibilityClass out;
  const AffineSlackSystem sys = build_slack_system(p, ChainSubject::WitnessSystem, 0.0, ctx.tol());
  if (!sys.consistent) {
    out.contract_violation = true;
    ctx.diagnose("classify_infeasibility: c lies in the range of A^T, so the problem is feasible");
    return out;
  }
  const SdpProblem w(LinearMapA(p.n(), sys.span), Eigen::VectorXd::Zero(sys.span.size()), sys.c);
  const FrResult fr = facial_reduce(w, ctx, ChainSubject::WitnessSystem);
  if (fr.feasible) {
    out.status = FeasStatus::StrongInfeasible;
    StrongInfeasibilityWitness wit;
    wit.side = StrongInfeasibilityWitness::Side::Dual;
    wit.x = fr.s_ri;
    out.witness = wit;
  } else {
    out.status = FeasStatus::WeakInfeasible;
    out.chain = fr.chain;
  }
  return out;
}

std::optional<SymMatrix> check_linear_feasibility(const LinearMapA& a, const Eigen::VectorXd& b, double tau) {
  const int n = a.n();
  if (a.m() == 0) {
    if (b.size() == 0 || b.norm() <= tau) return SymMatrix(n);
    return std::nullopt;
  }
  const Eigen::MatrixXd rows = a.svec_matrix().transpose();
  const LeastSquares ls = least_squares(rows, b, 1e-12);
  if (ls.residual > tau * (1.0 + b.norm())) return std::nullopt;
  return smat(ls.x, n);
}

}  // namespace sdpc
