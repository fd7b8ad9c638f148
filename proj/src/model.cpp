#include "sdpc/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdpc/error.hpp"

namespace sdpc {

LinearMapA::LinearMapA(int n, std::vector<SymMatrix> mats) : n_(n), mats_(std::move(mats)) {
  for (const auto& a : mats_) {
    if (a.n() != n_) fail(ErrorKind::DimensionMismatch, "LinearMapA: constraint matrices differ in size");
  }
}

Eigen::VectorXd LinearMapA::apply(const SymMatrix& x) const {
  if (x.n() != n_) fail(ErrorKind::DimensionMismatch, "LinearMapA::apply: wrong dimension");
  Eigen::VectorXd out(m());
  for (int i = 0; i < m(); ++i) out(i) = trace_inner(mats_[i], x);
  return out;
}

SymMatrix LinearMapA::adjoint(const Eigen::VectorXd& y) const {
  if (y.size() != m()) fail(ErrorKind::DimensionMismatch, "LinearMapA::adjoint: wrong length");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < m(); ++i) acc += y(i) * mats_[i].dense();
  return SymMatrix(acc);
}

Eigen::MatrixXd LinearMapA::svec_matrix() const {
  Eigen::MatrixXd out(svec_dim(n_), m());
  for (int i = 0; i < m(); ++i) out.col(i) = svec(mats_[i]);
  return out;
}

LinearMapA LinearMapA::congruence(const Eigen::MatrixXd& v) const {
  std::vector<SymMatrix> out;
  out.reserve(mats_.size());
  for (const auto& a : mats_) out.push_back(sdpc::congruence(a, v));
  return LinearMapA(static_cast<int>(v.cols()), std::move(out));
}

LinearMapA LinearMapA::lower(int r) const {
  std::vector<SymMatrix> out;
  out.reserve(mats_.size());
  for (const auto& a : mats_) out.push_back(pi_lower(a, r));
  return LinearMapA(n_ - r, std::move(out));
}

LinearMapA LinearMapA::combine(const Eigen::MatrixXd& coeff) const {
  if (coeff.rows() != m()) fail(ErrorKind::DimensionMismatch, "LinearMapA::combine: wrong row count");
  std::vector<SymMatrix> out;
  for (int j = 0; j < coeff.cols(); ++j) out.push_back(adjoint(coeff.col(j)));
  return LinearMapA(n_, std::move(out));
}

Face::Face(OrthogonalMatrix q, int r) : q_(std::move(q)), r_(r) {
  if (r < 0 || r > q_.n()) fail(ErrorKind::OutOfRange, "Face: rank out of range");
}

Face Face::full(int n) { return Face(OrthogonalMatrix::identity(n), n); }

SymMatrix Face::restrict_to(const SymMatrix& x) const { return pi_upper(rotate(x, q_), r_); }

SymMatrix Face::lift(const SymMatrix& x_hat) const {
  if (x_hat.n() != r_) fail(ErrorKind::DimensionMismatch, "Face::lift: wrong dimension");
  return expand(x_hat, basis());
}

SymMatrix Face::interior_point() const { return lift(SymMatrix::identity(r_)); }

bool Face::contains(const SymMatrix& x, const ToleranceConfig& tol) const {
  const SymMatrix rx = rotate(x, q_);
  const double lim = tol.feas * (1.0 + x.frobenius_norm());
  const Eigen::MatrixXd& d = rx.dense();
  const int k = n() - r_;
  if (k > 0 && d.rightCols(k).cwiseAbs().maxCoeff() > lim) return false;
  return min_eigenvalue(pi_upper(rx, r_)) >= -lim;
}

bool Face::dual_contains(const SymMatrix& x, const ToleranceConfig& tol) const {
  return min_eigenvalue(restrict_to(x)) >= -tol.feas * (1.0 + x.frobenius_norm());
}

SdpProblem::SdpProblem(LinearMapA a_, Eigen::VectorXd b_, SymMatrix c_, Orientation o)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), face(Face::full(c.n())), orientation(o) {
  validate();
}

void SdpProblem::validate() const {
  if (a.n() != c.n() && a.m() > 0) fail(ErrorKind::DimensionMismatch, "SdpProblem: A and c sizes differ");
  if (b.size() != a.m()) fail(ErrorKind::DimensionMismatch, "SdpProblem: length of b differs from m");
  if (face.n() != c.n()) fail(ErrorKind::DimensionMismatch, "SdpProblem: face dimension differs from c");
}

PrimalConversion primal_to_dual_form(const SdpProblem& primal, const ToleranceConfig& tol) {
  const int n = primal.n();
  PrimalConversion out;
  const Eigen::MatrixXd rows = primal.a.svec_matrix().transpose();
  const LeastSquares ls = least_squares(rows, primal.b, tol.sub);
  if (ls.residual > tol.sub * (1.0 + primal.b.norm())) {
    out.consistent = false;
    const Eigen::VectorXd r = primal.b - rows * ls.x;
    out.infeasibility_y = r / r.squaredNorm();
    return out;
  }
  const SymMatrix x0 = smat(ls.x, n);
  std::vector<SymMatrix> mats;
  Eigen::VectorXd b(ls.null_basis.cols());
  for (int j = 0; j < ls.null_basis.cols(); ++j) {
    const SymMatrix bj = smat(ls.null_basis.col(j), n);
    mats.push_back(-bj);
    b(j) = -trace_inner(primal.c, bj);
  }
  out.dual = SdpProblem(LinearMapA(n, std::move(mats)), b, x0);
  out.offset = trace_inner(primal.c, x0);
  return out;
}

const char* to_string(FeasStatus s) {
  switch (s) {
    case FeasStatus::StrongFeasible: return "strongly-feasible";
    case FeasStatus::WeakFeasible: return "weakly-feasible";
    case FeasStatus::WeakInfeasible: return "weakly-infeasible";
    case FeasStatus::StrongInfeasible: return "strongly-infeasible";
  }
  return "?";
}

FeasStatus feas_status_from_string(const std::string& s) {
  for (FeasStatus f : {FeasStatus::StrongFeasible, FeasStatus::WeakFeasible,
                       FeasStatus::WeakInfeasible, FeasStatus::StrongInfeasible}) {
    if (s == to_string(f)) return f;
  }
  fail(ErrorKind::Parse, "unknown status '" + s + "'");
}

ExtendedReal ExtendedReal::negated() const {
  switch (kind_) {
    case Kind::NegInf: return pos_inf();
    case Kind::PosInf: return neg_inf();
    case Kind::Finite: return finite(-value_);
  }
  return *this;
}

std::string ExtendedReal::to_string() const {
  if (kind_ == Kind::PosInf) return "+inf";
  if (kind_ == Kind::NegInf) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << value_;
  return os.str();
}

const char* to_string(Attainment a) {
  switch (a) {
    case Attainment::Yes: return "yes";
    case Attainment::No: return "no";
    case Attainment::NotApplicable: return "not-applicable";
  }
  return "?";
}

const char* to_string(ChainSubject s) {
  switch (s) {
    case ChainSubject::Feasibility: return "feasibility";
    case ChainSubject::OptimalSet: return "optimal-set";
    case ChainSubject::WitnessSystem: return "witness-system";
  }
  return "?";
}

ChainSubject chain_subject_from_string(const std::string& s) {
  for (ChainSubject c : {ChainSubject::Feasibility, ChainSubject::OptimalSet, ChainSubject::WitnessSystem}) {
    if (s == to_string(c)) return c;
  }
  fail(ErrorKind::Parse, "unknown chain subject '" + s + "'");
}

AffineSlackSystem build_slack_system(const SdpProblem& p, ChainSubject subject, double theta,
                                     const ToleranceConfig& tol) {
  const int n = p.n();
  AffineSlackSystem sys;
  switch (subject) {
    case ChainSubject::Feasibility:
      sys.c = p.c;
      sys.span = p.a.mats();
      return sys;
    case ChainSubject::OptimalSet: {
      const double bn = p.b.squaredNorm();
      if (bn == 0.0) {
        sys.c = p.c;
        sys.span = p.a.mats();
        sys.consistent = std::abs(theta) <= tol.sub;
        return sys;
      }
      const Eigen::VectorXd y_theta = p.b * (theta / bn);
      Eigen::MatrixXd row(1, p.m());
      row.row(0) = p.b.transpose();
      const LeastSquares ls = least_squares(row, Eigen::VectorXd::Zero(1), tol.sub);
      sys.c = p.slack(y_theta);
      for (int j = 0; j < ls.null_basis.cols(); ++j) sys.span.push_back(p.a.adjoint(ls.null_basis.col(j)));
      return sys;
    }
    case ChainSubject::WitnessSystem: {
      Eigen::MatrixXd rows(p.m() + 1, svec_dim(n));
      rows.row(0) = svec(p.c).transpose();
      for (int i = 0; i < p.m(); ++i) rows.row(i + 1) = svec(p.a[i]).transpose();
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p.m() + 1);
      rhs(0) = -1.0;
      const LeastSquares ls = least_squares(rows, rhs, tol.sub);
      sys.consistent = ls.residual <= tol.sub * 2.0;
      sys.c = smat(ls.x, n);
      for (int j = 0; j < ls.null_basis.cols(); ++j) sys.span.push_back(smat(ls.null_basis.col(j), n));
      return sys;
    }
  }
  return sys;
}

void VerificationReport::add(std::string name, double value, double limit) {
  Residual r{std::move(name), value, limit};
  if (!(r.value <= r.limit)) ok = false;  // NaN fails too
  residuals.push_back(std::move(r));
}

double certificate_tolerance(const ToleranceConfig& tol, double scale) {
  return tol.branch * (1.0 + scale);
}

namespace {

double max_norm(const std::vector<SymMatrix>& mats) {
  double m = 0.0;
  for (const auto& a : mats) m = std::max(m, a.frobenius_norm());
  return m;
}

/// Distance between the column spaces of two faces (projector difference).
double face_distance(const Face& a, const Face& b) {
  if (a.n() != b.n()) return INFINITY;
  const Eigen::MatrixXd va = a.basis(), vb = b.basis();
  return (va * va.transpose() - vb * vb.transpose()).norm();
}

void verify_chain(const SdpProblem& p, const ReducingChain& chain, const ToleranceConfig& tol,
                  VerificationReport& rep) {
  const AffineSlackSystem sys = build_slack_system(p, chain.subject, chain.theta, tol);
  if (!sys.consistent) {
    rep.add("subject system consistent", 1.0, 0.0);
    return;
  }
  const int n = p.n();
  const double span_scale = max_norm(sys.span);
  if (static_cast<int>(chain.steps.size()) > n) rep.add("chain length <= n", chain.steps.size(), n);
  std::optional<Face> expected = Face::full(n);
  for (std::size_t i = 0; i < chain.steps.size(); ++i) {
    const ReducingStep& st = chain.steps[i];
    const std::string tag = "step " + std::to_string(i + 1) + ": ";
    if (st.direction.n() != n || st.before.n() != n) fail(ErrorKind::DimensionMismatch, "chain step dimension");
    if (!expected) {
      rep.add(tag + "step after an infeasibility step", 1.0, 0.0);
      return;
    }
    rep.add(tag + "face matches previous step", face_distance(*expected, st.before), 1e-8);
    const double xn = st.direction.frobenius_norm();
    const SymMatrix inface = st.before.restrict_to(st.direction);
    rep.add(tag + "direction in dual face", std::max(0.0, -min_eigenvalue(inface)),
            certificate_tolerance(tol, xn));
    double orth = 0.0;
    for (const auto& s : sys.span) orth = std::max(orth, std::abs(trace_inner(s, st.direction)));
    rep.add(tag + "direction orthogonal to span", orth, certificate_tolerance(tol, span_scale * xn));
    const double cx = trace_inner(sys.c, st.direction);
    const double c_lim = certificate_tolerance(tol, sys.c.frobenius_norm() * xn);
    if (st.after) {
      rep.add(tag + "direction nonzero on face", st.before.rank() > 0 ? tol.branch - inface.trace() : 1.0, 0.0);
      rep.add(tag + "|<c,x>| on a reducing step", std::abs(cx), c_lim);
      const Face& af = *st.after;
      rep.add(tag + "face rank decreases", af.rank() - st.before.rank() + 1, 0.0);
      const int cut = numeric_rank(inface, tol.for_oracle_output());
      rep.add(tag + "new face is the old face cut by the direction",
              std::max(0, st.before.rank() - cut - af.rank()), 0.0);
      const Eigen::MatrixXd va = af.basis(), vb = st.before.basis();
      rep.add(tag + "new face inside old face", (va - vb * (vb.transpose() * va)).norm(), 1e-8);
      rep.add(tag + "new face orthogonal to direction",
              congruence(st.direction, va).frobenius_norm(), certificate_tolerance(tol, xn));
      expected = af;
    } else {
      rep.add(tag + "<c,x> = -1 on the infeasibility step", std::abs(cx + 1.0), c_lim);
      expected.reset();
    }
  }
  const bool infeasible = chain.terminal == ReducingChain::Terminal::InfeasibleDetected;
  if (infeasible && expected) rep.add("infeasibility chain ends with an infeasibility step", 1.0, 0.0);
  if (!infeasible && !expected) rep.add("minimal-face chain ends with a face", 1.0, 0.0);
}

void verify_witness(const SdpProblem& p, const StrongInfeasibilityWitness& w, const ToleranceConfig& tol,
                    VerificationReport& rep) {
  if (w.side == StrongInfeasibilityWitness::Side::Dual) {
    if (w.x.n() != p.n()) fail(ErrorKind::DimensionMismatch, "witness x has the wrong size");
    const double xn = w.x.frobenius_norm();
    rep.add("<c,x> = -1", std::abs(trace_inner(p.c, w.x) + 1.0),
            certificate_tolerance(tol, p.c.frobenius_norm() * xn));
    rep.add("A x = 0", p.m() ? p.a.apply(w.x).cwiseAbs().maxCoeff() : 0.0,
            certificate_tolerance(tol, max_norm(p.a.mats()) * xn));
    rep.add("x PSD", std::max(0.0, -min_eigenvalue(w.x)), certificate_tolerance(tol, xn));
  } else {
    if (w.y.size() != p.m()) fail(ErrorKind::DimensionMismatch, "witness y has the wrong length");
    const SymMatrix aty = p.a.adjoint(w.y);
    rep.add("<b,y> = 1", std::abs(p.b.dot(w.y) - 1.0), certificate_tolerance(tol, p.b.norm() * w.y.norm()));
    rep.add("-A^T y PSD", std::max(0.0, -min_eigenvalue(-aty)),
            certificate_tolerance(tol, aty.frobenius_norm()));
  }
}

}  // namespace

VerificationReport verify_certificate(const SdpProblem& problem, const Certificate& cert,
                                      const ToleranceConfig& tol) {
  problem.validate();
  VerificationReport rep;
  if (const auto* w = std::get_if<StrongInfeasibilityWitness>(&cert)) {
    verify_witness(problem, *w, tol, rep);
    return rep;
  }
  const auto& chain = std::get<ReducingChain>(cert);
  if (problem.orientation == Orientation::Dual) {
    verify_chain(problem, chain, tol, rep);
  } else {
    const PrimalConversion conv = primal_to_dual_form(problem, tol);
    if (!conv.consistent) {
      rep.add("primal equality system consistent", 1.0, 0.0);
    } else {
      verify_chain(conv.dual, chain, tol, rep);
    }
  }
  return rep;
}

std::vector<std::string> SolveReport::consistency_errors() const {
  std::vector<std::string> errs;
  const bool feasible = is_feasible(status);
  const auto infeasible_value =
      orientation == Orientation::Dual ? ExtendedReal::Kind::NegInf : ExtendedReal::Kind::PosInf;
  if (!feasible && value.kind() != infeasible_value) errs.push_back("infeasible status with wrong value");
  if (feasible && value.kind() == infeasible_value) errs.push_back("feasible status with infeasible value");
  if (attained == Attainment::Yes) {
    if (!solution) {
      errs.push_back("attained without a solution");
    } else if (value.is_finite() &&
               std::abs(solution->objective - value.value()) > 1e-6 * (1.0 + std::abs(value.value()))) {
      errs.push_back("solution objective differs from the optimal value");
    }
  }
  if (value.is_finite() == (attained == Attainment::NotApplicable)) {
    errs.push_back("attainment must be decided exactly when the value is finite");
  }
  return errs;
}

}  // namespace sdpc
