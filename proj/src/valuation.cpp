#include "sdpc/valuation.hpp"

#include <cmath>
#include <sstream>

#include "sdpc/error.hpp"
#include "sdpc/facial_reduction.hpp"

namespace sdpc {

namespace {

int largest_entry(const Eigen::VectorXd& b) {
  int j = 0;
  for (int i = 1; i < b.size(); ++i) {
    if (std::abs(b(i)) > std::abs(b(j))) j = i;
  }
  return j;
}

std::vector<SymMatrix> cut(const std::vector<SymMatrix>& mats, const OrthogonalMatrix& p, int s) {
  std::vector<SymMatrix> out;
  out.reserve(mats.size());
  for (const auto& a : mats) out.push_back(pi_lower(rotate(a, p), s));
  return out;
}

/// Drops the part of the trailing images of mats_1.. that is roundoff left
/// over from the partition directions.
void drop_residue(std::vector<SymMatrix>& cut_mats, const std::vector<SymMatrix>& mats, const ToleranceConfig& tol) {
  const int m = static_cast<int>(mats.size());
  const int ns = cut_mats.empty() ? 0 : cut_mats[0].n();
  if (m < 2 || ns == 0) return;
  Eigen::MatrixXd orig(svec_dim(mats[0].n()), m - 1);
  Eigen::MatrixXd imgs(svec_dim(ns), m - 1);
  for (int j = 1; j < m; ++j) {
    orig.col(j - 1) = svec(mats[j]);
    imgs.col(j - 1) = svec(cut_mats[j]);
  }
  const double ref = orig.jacobiSvd().singularValues()(0);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(imgs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sv = svd.singularValues();
  for (int q = 0; q < sv.size(); ++q) {
    if (sv(q) <= tol.face * ref) sv(q) = 0.0;
  }
  const Eigen::MatrixXd kept = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
  for (int j = 1; j < m; ++j) cut_mats[j] = smat(kept.col(j - 1), ns);
}

/// w with w_0 = 1 and sum_i w_i mats_i = 0, or nothing when e_0 is in the
/// range of the transposed map.
Eigen::VectorXd kernel_ray(const LinearMapA& a) {
  const int m = a.m();
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(m);
  e0(0) = 1.0;
  if (a.n() == 0) return e0;
  const Eigen::MatrixXd rows = a.svec_matrix().transpose();
  const LeastSquares ls = least_squares(rows, e0, 1e-12);
  const Eigen::VectorXd res = e0 - rows * ls.x;
  return res / res(0);
}

}  // namespace

Eigen::VectorXd NormalizedObjective::to_original(const Eigen::VectorXd& w) const {
  const int m = static_cast<int>(b.size());
  Eigen::VectorXd y(m);
  double acc = w(0);
  for (int i = 0, k = 1; i < m; ++i) {
    if (i == pivot) continue;
    y(i) = w(k++);
    acc -= b(i) * y(i);
  }
  y(pivot) = acc / b(pivot);
  return y;
}

Eigen::VectorXd NormalizedObjective::from_original(const Eigen::VectorXd& y) const {
  const int m = static_cast<int>(b.size());
  Eigen::VectorXd w(m);
  w(0) = b.dot(y);
  for (int i = 0, k = 1; i < m; ++i) {
    if (i != pivot) w(k++) = y(i);
  }
  return w;
}

NormalizedObjective normalize_objective(const SdpProblem& p) {
  p.validate();
  const int m = p.m();
  if (m == 0 || p.b.lpNorm<Eigen::Infinity>() == 0.0) {
    fail(ErrorKind::Precondition, "normalize_objective: zero objective");
  }
  NormalizedObjective out;
  out.b = p.b;
  out.pivot = largest_entry(p.b);
  const int j = out.pivot;
  const SymMatrix head = p.a[j] * (1.0 / p.b(j));
  std::vector<SymMatrix> mats{head};
  for (int i = 0; i < m; ++i) {
    if (i != j) mats.push_back(p.a[i] - head * p.b(i));
  }
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(m);
  e0(0) = 1.0;
  out.ref = SdpProblem(LinearMapA(p.n(), std::move(mats)), e0, p.c);
  return out;
}

SymMatrix rotated_slack(const SdpProblem& ref, const Valuation& v, const Eigen::VectorXd& w) {
  const SymMatrix s = ref.slack(w);
  return v.partition ? rotate(s, v.partition->p) : s;
}

Valuation reduce_and_value(const SdpProblem& ref, Context& ctx) {
  ref.validate();
  const ToleranceConfig& tol = ctx.tol();
  const int n = ref.n();
  const int m = ref.m();
  if (m == 0 || ref.b.size() != m || ref.b(0) != 1.0 || ref.b.tail(m - 1).lpNorm<Eigen::Infinity>() != 0.0) {
    fail(ErrorKind::Precondition, "reduce_and_value: objective must be e_0");
  }
  Valuation out;
  std::vector<SymMatrix> rest(ref.a.mats().begin() + 1, ref.a.mats().end());
  if (!rest.empty()) out.partition = build_partition(rest, n, ctx);
  OrthogonalMatrix p = OrthogonalMatrix::identity(n);
  if (out.partition) {
    out.s = out.partition->s;
    p = out.partition->p;
  }
  const int ns = n - out.s;
  std::vector<SymMatrix> cut_mats = cut(ref.a.mats(), p, out.s);
  if (out.partition) drop_residue(cut_mats, ref.a.mats(), tol);
  const LinearMapA cut_map(ns, std::move(cut_mats));
  out.small = SdpProblem(cut_map, ref.b, pi_lower(rotate(ref.c, p), out.s));

  // Linear part of the small primal: <A_1, x> = 1, <A_j, x> = 0.
  if (ns == 0 || !check_linear_feasibility(cut_map, ref.b, tol.branch)) {
    out.branch = Valuation::Branch::LinearInfeasible;
    out.ray = kernel_ray(cut_map);
  } else {
    // Improving ray: w_0 = 1 and -sum_i w_i A_i PSD on the trailing block.
    std::vector<SymMatrix> others(cut_map.mats().begin() + 1, cut_map.mats().end());
    const SdpProblem sys(LinearMapA(ns, others), Eigen::VectorXd::Zero(m - 1), -cut_map[0]);
    const FrResult fr = facial_reduce(sys, ctx);
    if (fr.feasible) {
      out.branch = Valuation::Branch::ImprovingRay;
      out.ray.resize(m);
      out.ray(0) = 1.0;
      out.ray.tail(m - 1) = fr.y_ri;
    }
  }

  if (out.branch == Valuation::Branch::Finite) {
    const OracleSolution sol = ipo_solve(out.small, ctx, "small-pair");
    out.theta = ExtendedReal::finite(sol.y_star(0));
    out.small_solution = sol;
    return out;
  }

  out.theta = ExtendedReal::pos_inf();
  SymMatrix z = rotate(-ref.a.adjoint(out.ray), p);
  const double scale = std::max(1.0, z.frobenius_norm());
  Eigen::VectorXd full = out.ray;
  bool complete = true;
  if (out.partition && (ns == 0 || numeric_rank(pi_lower(z, out.s), tol) == ns)) {
    try {
      const Eigen::VectorXd alpha = psd_complete(z, *out.partition, tol);
      full.tail(m - 1) -= out.partition->coef * alpha;
    } catch (const Error& e) {
      complete = false;
      ctx.diagnose(std::string("unbounded: ray completion failed: ") + e.what());
    }
  }
  if (complete && min_eigenvalue(-ref.a.adjoint(full)) >= -tol.feas * scale) {
    out.full_ray = full;
  } else {
    std::ostringstream os;
    os << "unbounded: the improving ray certifies the cut problem only (s = " << out.s << ")";
    ctx.diagnose(os.str());
  }
  return out;
}

}  // namespace sdpc
