#include "sdpc/pipeline.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include "sdpc/error.hpp"
#include "sdpc/facial_reduction.hpp"
#include "sdpc/partition.hpp"
#include "sdpc/recovery.hpp"
#include "sdpc/valuation.hpp"

namespace sdpc {

namespace {

template <class F>
auto at_step(int k, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), "pipeline step " + std::to_string(k) + ": " + e.what());
  }
}

class NearFeasibleGenerator final : public EpsilonGenerator {
 public:
  NearFeasibleGenerator(SdpProblem p, HyperFeasiblePartition part, Eigen::VectorXd y_hat)
      : p_(std::move(p)), part_(std::move(part)), y_hat_(std::move(y_hat)) {}

  EpsilonPoint point(double epsilon, Context& ctx) const override {
    if (!(epsilon > 0.0)) fail(ErrorKind::Precondition, "near-feasible point: epsilon must be positive");
    const SymMatrix z = rotate(p_.slack(y_hat_), part_.p);
    const NearFeasible nf = epsilon_near_feasible(z, part_, epsilon, ctx);
    EpsilonPoint out;
    out.kind = EpsilonPoint::Kind::NearFeasible;
    out.epsilon = epsilon;
    out.y = y_hat_ - part_.coef * nf.alpha;
    out.matrix = p_.slack(*out.y);
    out.dist_to_psd = dist_to_psd(out.matrix);
    return out;
  }

 private:
  SdpProblem p_;
  HyperFeasiblePartition part_;
  Eigen::VectorXd y_hat_;
};

class OptimalGenerator final : public EpsilonGenerator {
 public:
  OptimalGenerator(SdpProblem p, Eigen::VectorXd y0, Eigen::MatrixXd null_map, NormalizedObjective norm,
                   Valuation val, Eigen::VectorXd y_hat)
      : p_(std::move(p)),
        y0_(std::move(y0)),
        null_map_(std::move(null_map)),
        norm_(std::move(norm)),
        val_(std::move(val)),
        y_hat_(std::move(y_hat)) {}

  EpsilonPoint point(double epsilon, Context& ctx) const override {
    const Eigen::VectorXd z = epsilon_optimal(norm_, val_, y_hat_, epsilon, ctx.tol());
    EpsilonPoint out;
    out.kind = EpsilonPoint::Kind::Optimal;
    out.epsilon = epsilon;
    out.y = y0_ + null_map_ * z;
    out.matrix = p_.slack(*out.y);
    out.objective = p_.b.dot(*out.y);
    out.dist_to_psd = dist_to_psd(out.matrix);
    return out;
  }

 private:
  SdpProblem p_;
  Eigen::VectorXd y0_;
  Eigen::MatrixXd null_map_;
  NormalizedObjective norm_;
  Valuation val_;
  Eigen::VectorXd y_hat_;
};

/// Points of the converted problem read as primal points x with value
/// offset - <b', w>.
class PrimalView final : public EpsilonGenerator {
 public:
  PrimalView(std::shared_ptr<const EpsilonGenerator> inner, double offset)
      : inner_(std::move(inner)), offset_(offset) {}

  EpsilonPoint point(double epsilon, Context& ctx) const override {
    EpsilonPoint out = inner_->point(epsilon, ctx);
    out.y.reset();
    if (out.objective) out.objective = offset_ - *out.objective;
    return out;
  }

 private:
  std::shared_ptr<const EpsilonGenerator> inner_;
  double offset_;
};

PartitionSummary summarize(const HyperFeasiblePartition& part) { return {part.blocks, part.s}; }

std::shared_ptr<const EpsilonGenerator> near_feasible_handle(const SdpProblem& p, SolveReport& rep, Context& ctx) {
  const int n = p.n();
  auto part = build_partition(p.a.mats(), n, ctx);
  if (!part) {
    rep.contract_violation = true;
    ctx.diagnose("weak infeasibility: the range of A^T contains no nonzero PSD matrix");
    return nullptr;
  }
  rep.partition = summarize(*part);
  const int ns = n - part->s;
  Eigen::VectorXd y_hat = Eigen::VectorXd::Zero(p.m());
  if (ns > 0) {
    std::vector<SymMatrix> cut;
    for (const auto& a : p.a.mats()) cut.push_back(pi_lower(rotate(a, part->p), part->s));
    const SdpProblem small(LinearMapA(ns, cut), Eigen::VectorXd::Zero(p.m()), pi_lower(rotate(p.c, part->p), part->s));
    const FrResult fr = facial_reduce(small, ctx);
    if (!fr.feasible) {
      rep.contract_violation = true;
      ctx.diagnose("weak infeasibility: the cut problem is infeasible");
      return nullptr;
    }
    y_hat = fr.y_ri;
  }
  return std::make_shared<NearFeasibleGenerator>(p, std::move(*part), std::move(y_hat));
}

void finish(SolveReport& rep, Context& ctx, const SolveOptions& opts) {
  if (rep.epsilon_handle) {
    for (double eps : opts.epsilons) rep.epsilon_points.push_back(rep.epsilon_handle->point(eps, ctx));
  }
  rep.diagnostics = ctx.diagnostics();
  rep.oracle_calls = ctx.oracle_calls();
  rep.trace = ctx.trace();
  rep.config = ctx.tol();
}

void add_verified(SolveReport& rep, const SdpProblem& p, Certificate cert, Context& ctx, const char* what) {
  if (verify_certificate(p, cert, ctx.tol()).ok) {
    rep.certificates.push_back(std::move(cert));
  } else {
    ctx.diagnose(std::string(what) + " failed verification and was dropped");
  }
}

/// No free variables: the slack is c itself.
void solve_fixed(const SdpProblem& p, SolveReport& rep, Context& ctx) {
  const ToleranceConfig& tol = ctx.tol();
  const int n = p.n();
  const double scale = 1.0 + p.c.frobenius_norm();
  if (n > 0 && min_eigenvalue(p.c) < -tol.branch * scale) {
    rep.status = FeasStatus::StrongInfeasible;
    rep.value = ExtendedReal::neg_inf();
    rep.attained = Attainment::NotApplicable;
    const EigenDecomposition ed = eig_sym(p.c);
    SymMatrix x(n);
    double cx = 0.0;
    for (int i = 0; i < n; ++i) {
      if (ed.values(i) >= 0.0) continue;
      const Eigen::VectorXd v = ed.vectors.dense().col(i);
      x += SymMatrix(Eigen::MatrixXd(v * v.transpose()));
      cx += ed.values(i);
    }
    StrongInfeasibilityWitness w;
    w.side = StrongInfeasibilityWitness::Side::Dual;
    w.x = x * (-1.0 / cx);
    add_verified(rep, p, w, ctx, "strong infeasibility witness");
    return;
  }
  const int rank = n == 0 ? 0 : numeric_rank(p.c, tol);
  rep.status = rank == n ? FeasStatus::StrongFeasible : FeasStatus::WeakFeasible;
  rep.value = ExtendedReal::finite(0.0);
  rep.attained = Attainment::Yes;
  rep.solution = Solution{Eigen::VectorXd(0), p.c, 0.0, rank};
}

}  // namespace

SolveReport complete_solve(const SdpProblem& p, Context& ctx, const SolveOptions& opts) {
  if (p.orientation == Orientation::Primal) return solve_primal_form(p, ctx, opts);
  p.validate();
  const ToleranceConfig& tol = ctx.tol();
  SolveReport rep;
  rep.orientation = Orientation::Dual;
  if (p.m() == 0 || p.n() == 0) {
    solve_fixed(p, rep, ctx);
    finish(rep, ctx, opts);
    return rep;
  }

  // 1. Minimal face of the slack set, or the kind of infeasibility.
  const FrResult fr = at_step(1, [&] { return facial_reduce(p, ctx); });
  if (!fr.feasible) {
    rep.value = ExtendedReal::neg_inf();
    rep.attained = Attainment::NotApplicable;
    add_verified(rep, p, fr.chain, ctx, "infeasibility chain");
    const InfeasibilityClass cls = at_step(1, [&] { return classify_infeasibility(p, ctx); });
    rep.status = cls.status;
    rep.contract_violation = rep.contract_violation || cls.contract_violation;
    if (cls.witness) add_verified(rep, p, *cls.witness, ctx, "strong infeasibility witness");
    if (cls.chain) add_verified(rep, p, *cls.chain, ctx, "witness-system chain");
    if (rep.status == FeasStatus::WeakInfeasible) {
      rep.epsilon_handle = at_step(1, [&] { return near_feasible_handle(p, rep, ctx); });
    }
    finish(rep, ctx, opts);
    return rep;
  }
  rep.status = fr.face.is_full() ? FeasStatus::StrongFeasible : FeasStatus::WeakFeasible;
  if (!fr.face.is_full()) add_verified(rep, p, fr.chain, ctx, "minimal-face chain");

  // 2. The problem over the minimal face, strongly feasible by construction.
  const FaceRestriction& restr = fr.restriction;
  const Eigen::VectorXd& b_hat = restr.reduced.b;
  const bool zero_objective = b_hat.size() == 0 || b_hat.norm() <= tol.sub * (1.0 + p.b.norm());
  if (zero_objective) {
    rep.value = ExtendedReal::finite(restr.offset);
    rep.attained = Attainment::Yes;
    rep.solution = Solution{fr.y_ri, fr.s_ri, p.b.dot(fr.y_ri), fr.face.rank()};
    finish(rep, ctx, opts);
    return rep;
  }
  if (fr.face.rank() == 0) {
    rep.value = ExtendedReal::pos_inf();
    rep.attained = Attainment::NotApplicable;
    StrongInfeasibilityWitness w;
    w.side = StrongInfeasibilityWitness::Side::Primal;
    w.y = restr.null_map * (b_hat / b_hat.squaredNorm());
    add_verified(rep, p, w, ctx, "improving ray");
    finish(rep, ctx, opts);
    return rep;
  }

  // 3. Optimal value through the cut problem.
  const NormalizedObjective norm = at_step(3, [&] { return normalize_objective(restr.reduced); });
  const Valuation val = at_step(3, [&] { return reduce_and_value(norm.ref, ctx); });
  if (val.partition) rep.partition = summarize(*val.partition);
  if (!val.theta.is_finite()) {
    rep.value = ExtendedReal::pos_inf();
    rep.attained = Attainment::NotApplicable;
    if (val.full_ray) {
      StrongInfeasibilityWitness w;
      w.side = StrongInfeasibilityWitness::Side::Primal;
      w.y = restr.null_map * norm.to_original(*val.full_ray);
      add_verified(rep, p, w, ctx, "improving ray");
    }
    finish(rep, ctx, opts);
    return rep;
  }
  const double theta = restr.offset + val.theta.value();
  rep.value = ExtendedReal::finite(theta);

  // 4. Attainment: maximal-rank solution or epsilon-optimal points.
  const AttainmentResult att = at_step(4, [&] { return attainment_check(p, theta, ctx); });
  rep.contract_violation = rep.contract_violation || att.contract_violation;
  if (att.attained) {
    rep.attained = Attainment::Yes;
    rep.solution = Solution{att.y, att.slack, p.b.dot(att.y), att.rank};
  } else {
    rep.attained = Attainment::No;
    if (att.chain) add_verified(rep, p, *att.chain, ctx, "optimal-set chain");
    const Eigen::VectorXd y_hat = at_step(4, [&] { return interior_small_point(val, ctx); });
    rep.epsilon_handle =
        std::make_shared<OptimalGenerator>(p, restr.y0, restr.null_map, norm, val, y_hat);
  }
  finish(rep, ctx, opts);
  return rep;
}

SolveReport solve_primal_form(const SdpProblem& p, Context& ctx, const SolveOptions& opts) {
  p.validate();
  const ToleranceConfig& tol = ctx.tol();
  SdpProblem primal = p;
  primal.orientation = Orientation::Primal;
  SolveReport rep;
  rep.orientation = Orientation::Primal;
  const PrimalConversion conv = at_step(0, [&] { return primal_to_dual_form(primal, tol); });
  if (!conv.consistent) {
    rep.status = FeasStatus::StrongInfeasible;
    rep.value = ExtendedReal::pos_inf();
    rep.attained = Attainment::NotApplicable;
    StrongInfeasibilityWitness w;
    w.side = StrongInfeasibilityWitness::Side::Primal;
    w.y = conv.infeasibility_y;
    add_verified(rep, primal, w, ctx, "strong infeasibility witness");
    finish(rep, ctx, opts);
    return rep;
  }
  const SolveReport inner = complete_solve(conv.dual, ctx);
  rep.status = inner.status;
  switch (inner.value.kind()) {
    case ExtendedReal::Kind::Finite: rep.value = ExtendedReal::finite(conv.offset - inner.value.value()); break;
    case ExtendedReal::Kind::PosInf: rep.value = ExtendedReal::neg_inf(); break;
    case ExtendedReal::Kind::NegInf: rep.value = ExtendedReal::pos_inf(); break;
  }
  rep.attained = inner.attained;
  rep.partition = inner.partition;
  rep.contract_violation = inner.contract_violation;
  if (inner.solution) {
    Solution s = *inner.solution;
    s.y.reset();
    s.objective = conv.offset - s.objective;
    rep.solution = s;
  }
  for (const Certificate& cert : inner.certificates) {
    if (std::holds_alternative<ReducingChain>(cert)) {
      rep.certificates.push_back(cert);
      continue;
    }
    const auto& w = std::get<StrongInfeasibilityWitness>(cert);
    StrongInfeasibilityWitness out;
    if (w.side == StrongInfeasibilityWitness::Side::Dual) {
      // x' orthogonal to the null space of A: x' = A^T u with <b,u> = -1.
      out.side = StrongInfeasibilityWitness::Side::Primal;
      const LeastSquares ls = least_squares(primal.a.svec_matrix(), svec(w.x), 1e-12);
      out.y = -ls.x;
    } else {
      out.side = StrongInfeasibilityWitness::Side::Dual;
      out.x = -conv.dual.a.adjoint(w.y);
    }
    add_verified(rep, primal, out, ctx, "converted witness");
  }
  if (inner.epsilon_handle) rep.epsilon_handle = std::make_shared<PrimalView>(inner.epsilon_handle, conv.offset);
  finish(rep, ctx, opts);
  return rep;
}

SolveReport solve(const SdpProblem& problem, Context& ctx, const SolveOptions& opts) {
  return problem.orientation == Orientation::Primal ? solve_primal_form(problem, ctx, opts)
                                                    : complete_solve(problem, ctx, opts);
}

}  // namespace sdpc
