#include "sdpc/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdpc/error.hpp"
#include "sdpc/oracle.hpp"
#include "rank_polish.hpp"

namespace sdpc {

int HyperFeasiblePartition::offset(int i) const {
  int s = 0;
  for (int j = 0; j < i; ++j) s += blocks[j];
  return s;
}

namespace {

Eigen::MatrixXd svec_columns(const std::vector<SymMatrix>& mats, int n) {
  Eigen::MatrixXd cols(svec_dim(n), mats.size());
  for (std::size_t j = 0; j < mats.size(); ++j) cols.col(j) = svec(mats[j]);
  return cols;
}


}  // namespace

namespace {

/// Orthonormal spanning set of span(mats). Singular values below tol.face
/// times max(top one, ref) are dropped; to_coef maps coefficients on the
/// basis back to coefficients on mats.
struct SpanBasis {
  std::vector<SymMatrix> basis;
  Eigen::MatrixXd to_coef;
};

SpanBasis span_basis(const std::vector<SymMatrix>& mats, int n, const ToleranceConfig& tol, double ref = 0.0) {
  SpanBasis out;
  const Eigen::MatrixXd cols = svec_columns(mats, n);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(cols, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= tol.sub) return out;
  const double cutoff = tol.face * std::max(sv(0), ref);
  int r = 0;
  while (r < sv.size() && sv(r) > cutoff) ++r;
  for (int q = 0; q < r; ++q) out.basis.push_back(smat(svd.matrixU().col(q), n));
  out.to_coef = svd.matrixV().leftCols(r) * sv.head(r).cwiseInverse().asDiagonal();
  return out;
}

std::optional<NonzeroPsd> nonzero_psd_orthonormal(const std::vector<SymMatrix>& basis, int n, Context& ctx) {
  const ToleranceConfig& tol = ctx.tol();
  const int r = static_cast<int>(basis.size());
  NonzeroPsd out;
  SymMatrix candidate;
  if (r == svec_dim(n)) {
    candidate = SymMatrix::identity(n) * (1.0 / n);
  } else {
    // Orthonormal basis V_k of the orthogonal complement of the span.
    Eigen::MatrixXd cols(svec_dim(n), r);
    for (int j = 0; j < r; ++j) cols.col(j) = svec(basis[j]);
    const LeastSquares perp = least_squares(Eigen::MatrixXd(cols.transpose()), Eigen::VectorXd::Zero(r), tol.sub);
    const Eigen::MatrixXd& v = perp.null_basis;
    BlockSdp dir;
    dir.sizes = {n, 1};
    dir.c = {SymMatrix(n), SymMatrix::diagonal({1.0})};
    dir.b = Eigen::VectorXd::Zero(v.cols() + 1);
    for (int k = 0; k < v.cols(); ++k) {
      const SymMatrix vk = smat(v.col(k), n);
      dir.a.push_back({vk, SymMatrix::diagonal({-vk.trace()})});
    }
    dir.a.push_back({SymMatrix::identity(n), SymMatrix(1)});
    dir.b(v.cols()) = 1.0;
    const BlockSolution sol = solve_blocks(dir, ctx, "nonzero-psd");
    out.t_star = sol.x[1](0, 0);
    if (out.t_star > tol.branch) return std::nullopt;
    candidate = sol.x[0];
  }
  out.beta.resize(r);
  for (int j = 0; j < r; ++j) out.beta(j) = trace_inner(basis[j], candidate);
  out.element = combination(basis, out.beta, n);
  const double tr = out.element.trace();
  if (!(tr > tol.branch) || min_eigenvalue(out.element) / tr < -tol.branch) {
    std::ostringstream os;
    os << "find_nonzero_psd: candidate rejected after projection onto the subspace (trace " << tr
       << ", min eigenvalue " << min_eigenvalue(out.element) << ")";
    ctx.diagnose(os.str());
    return std::nullopt;
  }
  out.beta /= tr;
  out.element *= 1.0 / tr;
  return out;
}

}  // namespace

std::optional<NonzeroPsd> find_nonzero_psd(const std::vector<SymMatrix>& mats, int n, Context& ctx) {
  if (n == 0 || mats.empty()) return std::nullopt;
  const SpanBasis sb = span_basis(mats, n, ctx.tol());
  if (sb.basis.empty()) return std::nullopt;
  auto out = nonzero_psd_orthonormal(sb.basis, n, ctx);
  if (out) out->beta = sb.to_coef * out->beta;
  return out;
}

namespace {

Eigen::MatrixXd polar(const Eigen::MatrixXd& x) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// q with its trailing columns moved to t + lead k; both column groups are
/// replaced by the nearest orthonormal sets.
Eigen::MatrixXd reorthonormalize(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, int s) {
  const int n = static_cast<int>(q.rows());
  const Eigen::MatrixXd lead = q.leftCols(s);
  const Eigen::MatrixXd t = polar(q.rightCols(n - s) + lead * k);
  Eigen::MatrixXd next(n, n);
  next << polar(lead - t * (t.transpose() * lead)), t;
  return next;
}

/// Size of the trailing columns of a direction.
double trailing_residue(const std::vector<SymMatrix>& mats, const Eigen::VectorXd& beta, const Eigen::MatrixXd& t) {
  return (combination(mats, beta, static_cast<int>(t.rows())).dense() * t).norm();
}

/// Newton steps on the first direction and the trailing columns of q so that
/// the direction vanishes on the trailing block at fixed trace. The
/// eigenvectors behind q are only accurate to the square root of the
/// roundoff in the direction.
void refine_trailing(const std::vector<SymMatrix>& mats, Eigen::VectorXd& beta, Eigen::MatrixXd& q, int s) {
  const int n = static_cast<int>(q.rows());
  const int nt = n - s;
  const int m = static_cast<int>(mats.size());
  double best = trailing_residue(mats, beta, q.rightCols(nt));
  for (int it = 0; it < 5 && best > 0.0; ++it) {
    const Eigen::MatrixXd lead = q.leftCols(s);
    const Eigen::MatrixXd t = q.rightCols(nt);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n * nt + 1, m + s * nt);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n * nt + 1);
    const Eigen::MatrixXd d = combination(mats, beta, n).dense();
    const Eigen::MatrixXd dt = d * t;
    const Eigen::MatrixXd dl = d * lead;
    for (int j = 0; j < m; ++j) {
      const Eigen::MatrixXd mt = mats[j].dense() * t;
      for (int c = 0; c < nt; ++c)
        for (int a = 0; a < n; ++a) jac(c * n + a, j) = mt(a, c);
      jac(n * nt, j) = mats[j].trace();
    }
    for (int c = 0; c < nt; ++c) {
      for (int a = 0; a < n; ++a) {
        rhs(c * n + a) = -dt(a, c);
        for (int pp = 0; pp < s; ++pp) jac(c * n + a, m + pp + s * c) = dl(a, pp);
      }
    }
    const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(rhs);
    const Eigen::MatrixXd next = reorthonormalize(q, Eigen::Map<const Eigen::MatrixXd>(step.data() + m, s, nt), s);
    const Eigen::VectorXd next_beta = beta + step.head(m);
    const double r = trailing_residue(mats, next_beta, next.rightCols(nt));
    if (!(r < best)) break;
    best = r;
    q = next;
    beta = next_beta;
  }
}

/// Largest singular value of the trailing images of mats.
double image_residue(const std::vector<SymMatrix>& mats, const Eigen::MatrixXd& t) {
  const int nt = static_cast<int>(t.cols());
  Eigen::MatrixXd cols(svec_dim(nt), mats.size());
  for (std::size_t j = 0; j < mats.size(); ++j) {
    cols.col(j) = svec(SymMatrix(Eigen::MatrixXd(t.transpose() * mats[j].dense() * t)));
  }
  return cols.jacobiSvd().singularValues()(0);
}

/// Newton steps on the trailing columns of q so that every trailing image
/// t^T B t vanishes; for spans whose images there are roundoff only.
void vanish_trailing(const std::vector<SymMatrix>& mats, Eigen::MatrixXd& q, int s) {
  const int n = static_cast<int>(q.rows());
  const int nt = n - s;
  const int eqs = svec_dim(nt);
  double best = image_residue(mats, q.rightCols(nt));
  for (int it = 0; it < 5 && best > 0.0; ++it) {
    const Eigen::MatrixXd lead = q.leftCols(s);
    const Eigen::MatrixXd t = q.rightCols(nt);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(eqs * mats.size(), s * nt);
    Eigen::VectorXd rhs(eqs * mats.size());
    for (std::size_t j = 0; j < mats.size(); ++j) {
      const Eigen::MatrixXd& bj = mats[j].dense();
      const Eigen::MatrixXd tbt = t.transpose() * bj * t;
      const Eigen::MatrixXd lbt = lead.transpose() * bj * t;
      int row = static_cast<int>(j) * eqs;
      for (int b = 0; b < nt; ++b) {
        for (int a = 0; a <= b; ++a, ++row) {
          const double w = a == b ? 1.0 : std::sqrt(2.0);
          rhs(row) = -w * tbt(a, b);
          for (int pp = 0; pp < s; ++pp) {
            jac(row, pp + s * a) += w * lbt(pp, b);
            jac(row, pp + s * b) += w * lbt(pp, a);
          }
        }
      }
    }
    const Eigen::VectorXd k = jac.completeOrthogonalDecomposition().solve(rhs);
    const Eigen::MatrixXd next = reorthonormalize(q, Eigen::Map<const Eigen::MatrixXd>(k.data(), s, nt), s);
    const double r = image_residue(mats, next.rightCols(nt));
    if (!(r < best)) break;
    best = r;
    q = next;
  }
}

/// Best-conditioned element of the face found by polishing: maximize the
/// smallest eigenvalue of the leading k x k block over the elements of the
/// span whose trailing block vanishes, at unit trace.
std::optional<Polished> best_conditioned(const std::vector<SymMatrix>& mats, const Polished& start, int k, int p,
                                         Context& ctx) {
  const ToleranceConfig& tol = ctx.tol();
  const int m = static_cast<int>(mats.size());
  const Eigen::MatrixXd u = start.ed.vectors.leading(k);
  Eigen::MatrixXd null_map = Eigen::MatrixXd::Identity(m, m);
  if (k < p) {
    // Both the off-diagonal and the trailing block must vanish; the trailing
    // block alone admits indefinite elements of the form A + eps B.
    const Eigen::MatrixXd& w = start.ed.vectors.dense();
    Eigen::MatrixXd cmap(svec_dim(p) - svec_dim(k), m);
    for (int q = 0; q < m; ++q) {
      const Eigen::MatrixXd r = w.transpose() * mats[q].dense() * w;
      int row = 0;
      for (int j = k; j < p; ++j)
        for (int i = 0; i <= j; ++i, ++row) cmap(row, q) = (i == j ? 1.0 : std::sqrt(2.0)) * r(i, j);
    }
    null_map = least_squares(cmap, Eigen::VectorXd::Zero(cmap.rows()), tol.face).null_basis;
  }
  const int d = static_cast<int>(null_map.cols());
  if (d == 0) return std::nullopt;
  std::vector<SymMatrix> g;
  for (int j = 0; j < d; ++j) g.push_back(congruence(combination(mats, null_map.col(j), p), u));

  // sup lambda  s.t.  sum gamma_j G_j - lambda I PSD,  1 - sum gamma_j tr G_j >= 0.
  BlockSdp prob;
  prob.sizes = {k, 1};
  prob.c = {SymMatrix(k), SymMatrix::diagonal({1.0})};
  prob.b = Eigen::VectorXd::Zero(d + 1);
  for (int j = 0; j < d; ++j) prob.a.push_back({-g[j], SymMatrix::diagonal({g[j].trace()})});
  prob.a.push_back({SymMatrix::identity(k), SymMatrix(1)});
  prob.b(d) = 1.0;
  const BlockSolution sol = solve_blocks(prob, ctx, "partition-conditioning");
  const double lam = sol.y(d);
  if (!(lam > tol.face)) return std::nullopt;
  const Eigen::VectorXd beta = null_map * sol.y.head(d);
  return polish_rank(mats, beta, k, p, tol);
}

}  // namespace

std::optional<HyperFeasiblePartition> build_partition(const std::vector<SymMatrix>& mats, int n, Context& ctx) {
  const ToleranceConfig& tol = ctx.tol();
  const int m = static_cast<int>(mats.size());
  HyperFeasiblePartition part;
  part.p = OrthogonalMatrix::identity(n);
  std::vector<Eigen::VectorXd> betas;
  double ref = 0.0;
  if (m > 0 && n > 0) ref = svec_columns(mats, n).jacobiSvd().singularValues()(0);
  while (part.s < n && m > 0) {
    const int s = part.s;
    const int p = n - s;
    std::vector<SymMatrix> images;
    for (const auto& b : mats) images.push_back(pi_lower(rotate(b, part.p), s));

    // Images of earlier directions are zero only up to roundoff and must
    // not count toward the residual subspace.
    const SpanBasis sb = span_basis(images, p, tol, ref);
    if (sb.basis.empty()) break;
    const std::vector<SymMatrix>& basis = sb.basis;
    const Eigen::MatrixXd& to_coef = sb.to_coef;
    const auto found = nonzero_psd_orthonormal(basis, p, ctx);
    if (!found) break;
    // Only clearly separated eigenvalues count: without strict
    // complementarity the oracle leaves spurious eigenvalues far above the
    // face tolerance. A genuine smaller part is picked up by the next block.
    const EigenDecomposition fe = eig_sym(found->element);
    int k0 = 0;
    while (k0 < p && fe.values(k0) > std::sqrt(tol.face) * fe.values(0)) ++k0;
    k0 = std::max(1, k0);
    std::optional<Polished> pol;
    int k = k0;
    for (; k >= 1 && !pol; --k) {
      if (auto first = polish_rank(basis, found->beta, k, p, tol)) pol = best_conditioned(basis, *first, k, p, ctx);
    }
    ++k;
    Eigen::VectorXd gamma = found->beta;
    EigenDecomposition ed = eig_sym(found->element);
    if (pol) {
      gamma = pol->beta;
      ed = pol->ed;
      if (k < k0) {
        std::ostringstream os;
        os << "build_partition: block " << part.blocks.size() + 1 << " rank lowered from " << k0 << " to " << k
           << " (oracle eigenvalues not separated)";
        ctx.diagnose(os.str());
      }
    } else {
      k = k0;
      ctx.diagnose("build_partition: polishing the partition direction did not converge; kept the oracle direction");
    }
    part.p = part.p.compose_lower(s, ed.vectors);
    part.blocks.push_back(k);
    betas.push_back(to_coef * gamma);
    part.s += k;
  }
  if (part.blocks.empty()) return std::nullopt;
  if (part.s < n) {
    Eigen::MatrixXd q = part.p.dense();
    refine_trailing(mats, betas[0], q, part.s);
    if (image_residue(mats, q.rightCols(n - part.s)) <= std::sqrt(tol.face) * ref) vanish_trailing(mats, q, part.s);
    part.p = OrthogonalMatrix(q);
  }
  part.coef.resize(m, betas.size());
  for (std::size_t i = 0; i < betas.size(); ++i) {
    part.coef.col(i) = betas[i];
    part.dirs.push_back(rotate(combination(mats, betas[i], n), part.p));
  }
  if (part.s == n && part.size() > 1) {
    // The blocks cover everything, so the span holds a definite element:
    // complete from zero and keep that single block.
    HyperFeasiblePartition one;
    one.p = OrthogonalMatrix::identity(n);
    one.coef = part.coef * psd_complete(SymMatrix(n), part, tol);
    one.dirs = {combination(mats, one.coef.col(0), n)};
    one.blocks = {n};
    one.s = n;
    ctx.diagnose("build_partition: blocks covered the whole space; merged into one definite block");
    return one;
  }
  return part;
}

Eigen::VectorXd psd_complete(const SymMatrix& z, const HyperFeasiblePartition& part, const ToleranceConfig& tol) {
  const int n = z.n();
  const int l = part.size();
  if (n - part.s > 0 && numeric_rank(pi_lower(z, part.s), tol) < n - part.s) {
    fail(ErrorKind::Precondition, "psd_complete: trailing block is not positive definite");
  }
  const double delta = 1e-6;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(l);
  SymMatrix cur = z;
  for (int i = l - 1; i >= 0; --i) {
    const int s0 = part.offset(i);
    const int k = part.blocks[i];
    const SymMatrix a = pi_lower(part.dirs[i], s0);
    const SymMatrix zz = pi_lower(cur, s0);
    const Eigen::MatrixXd& zd = zz.dense();
    const int rest = zz.n() - k;
    Eigen::MatrixXd schur = -zd.topLeftCorner(k, k);
    double floor = 1.0;
    if (rest > 0) {
      const Eigen::MatrixXd m12 = zd.topRightCorner(k, rest);
      const Eigen::MatrixXd m22 = zd.bottomRightCorner(rest, rest);
      schur += m12 * m22.llt().solve(m12.transpose());
      floor = min_eigenvalue(SymMatrix(m22));
    }
    const double lam_a = min_eigenvalue(pi_upper(a, k));
    const double lam = eig_sym(SymMatrix(schur)).values(0);
    // lambda_min(zz + alpha a) is concave, nondecreasing and tends to
    // lambda_min of the block below; aim for half of that so later blocks
    // see a well-conditioned trailing part.
    const double target = 0.5 * floor;
    auto good = [&](double x) { return min_eigenvalue(zz + a * x) >= target; };
    double hi = std::max(delta, lam / lam_a + delta);
    int doublings = 0;
    while (!good(hi) && doublings < 200) {
      hi *= 2.0;
      ++doublings;
    }
    if (!good(hi)) fail(ErrorKind::IllConditioned, "psd_complete: block cannot be made definite");
    double lo = std::max(0.0, lam / lam_a);
    if (lo >= hi || good(lo)) lo = 0.0;
    for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (good(mid) ? hi : lo) = mid;
    }
    const double ai = std::max(delta, hi);
    alpha(i) = ai;
    cur += part.dirs[i] * ai;
  }
  if (min_eigenvalue(cur) <= 0.0) fail(ErrorKind::IllConditioned, "psd_complete: completion is not definite");
  return alpha;
}

NearFeasible epsilon_near_feasible(const SymMatrix& z, const HyperFeasiblePartition& part, double epsilon,
                                   Context& ctx) {
  const ToleranceConfig& tol = ctx.tol();
  const int n = z.n();
  const int l = part.size();
  if (epsilon < 0.0) fail(ErrorKind::Precondition, "epsilon_near_feasible: negative epsilon");
  const SymMatrix tail = pi_lower(z, part.s);
  if (min_eigenvalue(tail) < -tol.feas * (1.0 + tail.frobenius_norm())) {
    fail(ErrorKind::Precondition, "epsilon_near_feasible: trailing block is not PSD");
  }
  NearFeasible out;
  if (epsilon == 0.0) {
    out.alpha = psd_complete(z, part, tol);
  } else {
    // sup -sum alpha_i  s.t.  (z + (eps/n) I, 0) + sum alpha_i (D_i, e_i) PSD.
    BlockSdp d;
    d.sizes.push_back(n);
    d.c.push_back(z + SymMatrix::identity(n) * (epsilon / n));
    for (int i = 0; i < l; ++i) {
      d.sizes.push_back(1);
      d.c.push_back(SymMatrix(1));
    }
    d.b = -Eigen::VectorXd::Ones(l);
    for (int i = 0; i < l; ++i) {
      BlockMatrix ai;
      ai.push_back(-part.dirs[i]);
      for (int j = 0; j < l; ++j) ai.push_back(SymMatrix::diagonal({j == i ? -1.0 : 0.0}));
      d.a.push_back(std::move(ai));
    }
    try {
      const BlockSolution sol = solve_blocks(d, ctx, "near-feasible");
      out.alpha = sol.y.cwiseMax(0.0);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MaxIterations && e.kind() != ErrorKind::IllConditioned) throw;
      // Badly scaled directions: complete z + (eps/n) I block by block instead.
      ctx.diagnose(std::string("epsilon_near_feasible: ") + e.what() + "; using block completion");
      out.alpha = psd_complete(z + SymMatrix::identity(n) * (epsilon / n), part, tol);
    }
  }
  out.z_tilde = z;
  for (int i = 0; i < l; ++i) out.z_tilde += part.dirs[i] * out.alpha(i);
  return out;
}

}  // namespace sdpc
