#include "sdpc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdpc/error.hpp"

namespace sdpc {

double block_inner(const BlockMatrix& a, const BlockMatrix& b) {
  if (a.size() != b.size()) fail(ErrorKind::DimensionMismatch, "block_inner: block counts differ");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += trace_inner(a[k], b[k]);
  return s;
}

void BlockSdp::validate() const {
  if (c.size() != sizes.size()) fail(ErrorKind::DimensionMismatch, "BlockSdp: c block count");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (c[k].n() != sizes[k]) fail(ErrorKind::DimensionMismatch, "BlockSdp: c block size");
  }
  if (b.size() != m()) fail(ErrorKind::DimensionMismatch, "BlockSdp: length of b");
  for (const auto& ai : a) {
    if (ai.size() != sizes.size()) fail(ErrorKind::DimensionMismatch, "BlockSdp: constraint block count");
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (ai[k].n() != sizes[k]) fail(ErrorKind::DimensionMismatch, "BlockSdp: constraint block size");
    }
  }
}

namespace {

using Mat = Eigen::MatrixXd;
using Blocks = std::vector<Mat>;

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

double inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double norm(const Blocks& a) { return std::sqrt(inner(a, a)); }

Blocks axpy(const Blocks& x, double alpha, const Blocks& d) {
  Blocks out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] + alpha * d[k];
  return out;
}

double min_eig(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Dense working copy after presolve: independent, unit-norm constraint rows.
struct Work {
  std::vector<int> sizes;
  std::vector<Blocks> a;
  Blocks c;
  Eigen::VectorXd b;
  std::vector<int> kept;          // original index of each working row
  std::vector<double> row_scale;  // working row = original row / scale
  int total = 0;                  // sum of block sizes

  Eigen::VectorXd apply(const Blocks& x) const {
    Eigen::VectorXd out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out(i) = inner(a[i], x);
    return out;
  }
  Blocks adjoint(const Eigen::VectorXd& y) const {
    Blocks out(sizes.size());
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      out[k] = Mat::Zero(sizes[k], sizes[k]);
      for (std::size_t i = 0; i < a.size(); ++i) out[k] += y(i) * a[i][k];
    }
    return out;
  }
};

Eigen::VectorXd stacked_svec(const BlockMatrix& blocks) {
  int d = 0;
  for (const auto& m : blocks) d += svec_dim(m.n());
  Eigen::VectorXd v(d);
  int off = 0;
  for (const auto& m : blocks) {
    const int k = svec_dim(m.n());
    v.segment(off, k) = svec(m);
    off += k;
  }
  return v;
}

Work presolve(const BlockSdp& p, const ToleranceConfig& tol) {
  Work w;
  w.sizes = p.sizes;
  for (int s : p.sizes) w.total += s;
  for (const auto& ck : p.c) w.c.push_back(ck.dense());
  const int m = p.m();
  if (m == 0) {
    w.b = Eigen::VectorXd(0);
    return w;
  }
  Mat rows(stacked_svec(p.c).size(), m);
  for (int i = 0; i < m; ++i) rows.col(i) = stacked_svec(p.a[i]);
  Eigen::ColPivHouseholderQR<Mat> qr(rows);
  const double rmax = qr.rows() > 0 && qr.cols() > 0 ? std::abs(qr.matrixQR()(0, 0)) : 0.0;
  qr.setThreshold(std::max(tol.sub, 1e-13));
  int rank = 0;
  for (int i = 0; i < std::min<int>(qr.rows(), qr.cols()); ++i) {
    if (std::abs(qr.matrixQR()(i, i)) > std::max(tol.sub, 1e-13) * std::max(1.0, rmax)) ++rank;
  }
  std::vector<int> kept;
  for (int i = 0; i < rank; ++i) kept.push_back(qr.colsPermutation().indices()(i));
  std::sort(kept.begin(), kept.end());
  if (rank < m) {
    // Dropped rows must be implied by the kept ones, right-hand side included.
    Mat kept_rows(rows.rows(), rank);
    Eigen::VectorXd kept_b(rank);
    for (int j = 0; j < rank; ++j) {
      kept_rows.col(j) = rows.col(kept[j]);
      kept_b(j) = p.b(kept[j]);
    }
    const LeastSquares ls = least_squares(kept_rows.transpose(), kept_b, 1e-13);
    const Eigen::VectorXd implied = rows.transpose() * ls.x;
    if ((implied - p.b).norm() > tol.feas * (1.0 + p.b.norm())) {
      fail(ErrorKind::ContractViolation, "oracle: equality constraints are inconsistent");
    }
  }
  w.kept = kept;
  w.b.resize(rank);
  for (int j = 0; j < rank; ++j) {
    const int i = kept[j];
    const double s = rows.col(i).norm();
    w.row_scale.push_back(s);
    Blocks ai;
    for (const auto& blk : p.a[i]) ai.push_back(blk.dense() / s);
    w.a.push_back(std::move(ai));
    w.b(j) = p.b(i) / s;
  }
  return w;
}

struct Nt {
  Mat l;       // chol(X)
  Mat g;       // W = g g^T
  Mat ginv;
  Mat w;
  Eigen::VectorXd lambda;
};

bool nt_scaling(const Mat& x, const Mat& s, Nt& out) {
  Eigen::LLT<Mat> cx(x);
  if (cx.info() != Eigen::Success) return false;
  out.l = cx.matrixL();
  const Mat lsl = sym(out.l.transpose() * s * out.l);
  Eigen::SelfAdjointEigenSolver<Mat> es(lsl);
  if (es.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = es.eigenvalues();
  if (d.minCoeff() <= 0.0) return false;
  const Eigen::VectorXd d14 = d.array().pow(-0.25);
  const Eigen::VectorXd dm14 = d.array().pow(0.25);
  out.g = out.l * es.eigenvectors() * d14.asDiagonal();
  out.ginv = dm14.asDiagonal() * es.eigenvectors().transpose() *
             out.l.triangularView<Eigen::Lower>().solve(Mat::Identity(x.rows(), x.rows()));
  out.w = sym(out.g * out.g.transpose());
  out.lambda = d.array().sqrt();
  return true;
}

/// Largest alpha with x + alpha dx PSD (infinity when dx keeps it PSD).
double max_step(const Mat& l, const Mat& dx) {
  const Mat li = l.triangularView<Eigen::Lower>().solve(Mat::Identity(l.rows(), l.rows()));
  const double lo = min_eig(sym(li * dx * li.transpose()));
  if (lo >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lo;
}

struct Iterate {
  Blocks x, s;
  Eigen::VectorXd y;
};

struct Metrics {
  double pobj = 0, dobj = 0, relgap = 0, pinf = 0, dinf = 0;
  double err() const { return std::max({relgap, pinf, dinf}); }
};

Metrics measure(const Work& w, const Iterate& it, double bnorm, double cnorm) {
  Metrics m;
  m.pobj = inner(w.c, it.x);
  m.dobj = w.b.size() ? w.b.dot(it.y) : 0.0;
  const double complementarity = inner(it.x, it.s);
  m.relgap = std::max(std::abs(m.pobj - m.dobj), complementarity) / (1.0 + std::abs(m.pobj) + std::abs(m.dobj));
  m.pinf = (w.b - w.apply(it.x)).norm() / (1.0 + bnorm);
  Blocks rd = w.adjoint(it.y);
  for (std::size_t k = 0; k < rd.size(); ++k) rd[k] = w.c[k] - it.s[k] - rd[k];
  m.dinf = norm(rd) / (1.0 + cnorm);
  return m;
}

}  // namespace

BlockSolution solve_blocks(const BlockSdp& p, Context& ctx, const std::string& kind) {
  p.validate();
  const ToleranceConfig& tol = ctx.tol();
  const Work w = presolve(p, tol);
  const std::size_t nb = w.sizes.size();
  const int m = static_cast<int>(w.a.size());
  const double bnorm = w.b.norm();
  const double cnorm = norm(w.c);

  Iterate it;
  it.y = Eigen::VectorXd::Zero(m);
  for (std::size_t k = 0; k < nb; ++k) {
    const int nk = w.sizes[k];
    double xi = std::max(10.0, std::sqrt(static_cast<double>(nk)));
    double eta = std::max(10.0, std::sqrt(static_cast<double>(nk)));
    for (int i = 0; i < m; ++i) {
      const double an = w.a[i][k].norm();
      xi = std::max(xi, nk * (1.0 + std::abs(w.b(i))) / (1.0 + an));
      eta = std::max(eta, (1.0 + an) / std::sqrt(static_cast<double>(nk)));
    }
    eta = std::max(eta, (1.0 + w.c[k].norm()) / std::sqrt(static_cast<double>(nk)));
    it.x.push_back(xi * Mat::Identity(nk, nk));
    it.s.push_back(eta * Mat::Identity(nk, nk));
  }

  // Gram matrix of the constraints, used to keep A dx = rp exact when W is badly conditioned.
  Mat gram(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) gram(i, j) = gram(j, i) = inner(w.a[i], w.a[j]);
  const Eigen::LLT<Mat> gram_llt(gram);

  const double target = 1e-13;
  Iterate best = it;
  Metrics best_m = measure(w, it, bnorm, cnorm);
  int iterations = 0;
  int since_improvement = 0;
  bool hit_limit = true;

  for (int iter = 0; iter < tol.max_iter; ++iter) {
    const Metrics cur = measure(w, it, bnorm, cnorm);
    if (cur.err() < best_m.err()) {
      if (cur.err() < 0.7 * best_m.err()) since_improvement = 0;
      best = it;
      best_m = cur;
    }
    if (cur.err() < target) {
      hit_limit = false;
      break;
    }
    if (++since_improvement > 15) {
      hit_limit = false;
      break;
    }
    iterations = iter + 1;

    std::vector<Nt> nt(nb);
    bool scaled = true;
    for (std::size_t k = 0; k < nb; ++k) scaled = scaled && nt_scaling(it.x[k], it.s[k], nt[k]);
    if (!scaled) {
      hit_limit = false;
      break;
    }

    const Eigen::VectorXd rp = w.b - w.apply(it.x);
    Blocks rd = w.adjoint(it.y);
    for (std::size_t k = 0; k < nb; ++k) rd[k] = w.c[k] - it.s[k] - rd[k];
    const double mu = inner(it.x, it.s) / w.total;

    // Schur complement M_ij = <A_i, W A_j W>.
    std::vector<Blocks> waw(m, Blocks(nb));
    for (int j = 0; j < m; ++j)
      for (std::size_t k = 0; k < nb; ++k) waw[j][k] = nt[k].w * w.a[j][k] * nt[k].w;
    Mat schur(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= i; ++j) schur(i, j) = schur(j, i) = inner(w.a[i], waw[j]);
    Eigen::LLT<Mat> chol(schur);
    Eigen::LDLT<Mat> ldlt;
    const bool use_llt = chol.info() == Eigen::Success;
    if (!use_llt) ldlt.compute(schur);
    Blocks w_rd_w(nb);
    for (std::size_t k = 0; k < nb; ++k) w_rd_w[k] = nt[k].w * rd[k] * nt[k].w;
    const Eigen::VectorXd a_wrdw = w.apply(w_rd_w);

    auto direction = [&](const Blocks& rc, Blocks& dx, Eigen::VectorXd& dy, Blocks& ds) {
      const Eigen::VectorXd rhs = rp - w.apply(rc) + a_wrdw;
      dy = m ? (use_llt ? Eigen::VectorXd(chol.solve(rhs)) : Eigen::VectorXd(ldlt.solve(rhs)))
             : Eigen::VectorXd(0);
      const Blocks aty = w.adjoint(dy);
      ds.assign(nb, Mat());
      dx.assign(nb, Mat());
      for (std::size_t k = 0; k < nb; ++k) {
        ds[k] = sym(rd[k] - aty[k]);
        dx[k] = sym(rc[k] - nt[k].w * ds[k] * nt[k].w);
      }
      if (m) {
        const Blocks fix = w.adjoint(gram_llt.solve(Eigen::VectorXd(rp - w.apply(dx))));
        for (std::size_t k = 0; k < nb; ++k) dx[k] += fix[k];
      }
    };
    auto steps = [&](const Blocks& dx, const Blocks& ds, double& ap, double& ad) {
      ap = ad = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(nt[k].l, dx[k]));
        Eigen::LLT<Mat> cs(it.s[k]);
        ad = std::min(ad, max_step(Mat(cs.matrixL()), ds[k]));
      }
    };

    // Predictor.
    Blocks rc(nb);
    for (std::size_t k = 0; k < nb; ++k) rc[k] = -it.x[k];
    Blocks dx, ds;
    Eigen::VectorXd dy;
    direction(rc, dx, dy, ds);
    double ap, ad;
    steps(dx, ds, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    const double gap_aff = inner(axpy(it.x, ap, dx), axpy(it.s, ad, ds));
    const double ratio = std::clamp(gap_aff / inner(it.x, it.s), 0.0, 1.0);
    const double sigma = std::pow(ratio, 3);

    // Corrector: Lambda o T = sigma mu I - Lambda^2 - (dX~ dS~ + dS~ dX~)/2.
    for (std::size_t k = 0; k < nb; ++k) {
      const Mat dxt = nt[k].ginv * dx[k] * nt[k].ginv.transpose();
      const Mat dst = nt[k].g.transpose() * ds[k] * nt[k].g;
      const Eigen::VectorXd& lam = nt[k].lambda;
      const int nk = w.sizes[k];
      Mat h = -0.5 * (dxt * dst + dst * dxt);
      for (int i = 0; i < nk; ++i) h(i, i) += sigma * mu - lam(i) * lam(i);
      Mat t(nk, nk);
      for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nk; ++j) t(i, j) = 2.0 * h(i, j) / (lam(i) + lam(j));
      rc[k] = sym(nt[k].g * sym(t) * nt[k].g.transpose());
    }
    direction(rc, dx, dy, ds);
    steps(dx, ds, ap, ad);
    const double gamma = 0.9 + 0.09 * std::min({1.0, ap, ad});
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    if (std::max(ap, ad) < 1e-12) {
      hit_limit = false;
      break;
    }
    it.x = axpy(it.x, ap, dx);
    it.s = axpy(it.s, ad, ds);
    it.y += ad * dy;
    for (auto& xk : it.x) xk = sym(xk);
    for (auto& sk : it.s) sk = sym(sk);
  }
  {
    const Metrics cur = measure(w, it, bnorm, cnorm);
    if (cur.err() < best_m.err()) {
      best = it;
      best_m = cur;
    }
  }

  // Back to the caller's data.
  BlockSolution out;
  out.iterations = iterations;
  out.y = Eigen::VectorXd::Zero(p.m());
  for (int j = 0; j < m; ++j) out.y(w.kept[j]) = best.y(j) / w.row_scale[j];
  for (std::size_t k = 0; k < nb; ++k) out.x.push_back(SymMatrix(best.x[k]));
  out.s = p.c;
  for (int i = 0; i < p.m(); ++i)
    for (std::size_t k = 0; k < nb; ++k) out.s[k] -= p.a[i][k] * out.y(i);
  out.primal_objective = block_inner(p.c, out.x);
  out.dual_objective = p.m() ? p.b.dot(out.y) : 0.0;
  out.gap = std::abs(out.primal_objective - out.dual_objective);
  Eigen::VectorXd ax(p.m());
  for (int i = 0; i < p.m(); ++i) ax(i) = block_inner(p.a[i], out.x);
  out.primal_residual = (ax - p.b).norm();
  out.min_eig_x = 0.0;
  out.min_eig_s = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    out.min_eig_x = std::min(out.min_eig_x, min_eigenvalue(out.x[k]));
    out.min_eig_s = std::min(out.min_eig_s, min_eigenvalue(out.s[k]));
  }

  const double value = 0.5 * (out.primal_objective + out.dual_objective);
  const bool ok = out.gap <= tol.gap * (1.0 + std::abs(value)) &&
                  out.primal_residual <= tol.feas * (1.0 + p.b.norm()) && out.min_eig_x >= -tol.feas &&
                  out.min_eig_s >= -tol.feas;
  TraceEntry e;
  e.kind = kind;
  e.n = w.total;
  e.m = m;
  e.iterations = iterations;
  e.primal_objective = out.primal_objective;
  e.dual_objective = out.dual_objective;
  e.gap = out.gap;
  e.ok = ok;
  ctx.record(e);
  if (!ok) {
    std::ostringstream os;
    os << "oracle (" << kind << "): contract not met after " << iterations << " iterations (gap " << out.gap
       << ", primal residual " << out.primal_residual << ", min eig x " << out.min_eig_x << ", min eig s "
       << out.min_eig_s << ")";
    fail(hit_limit ? ErrorKind::MaxIterations : ErrorKind::IllConditioned, os.str());
  }
  return out;
}

namespace {

BlockSdp single_block(const SdpProblem& p) {
  BlockSdp bp;
  bp.sizes = {p.n()};
  bp.c = {p.c};
  for (const auto& ai : p.a.mats()) bp.a.push_back({ai});
  bp.b = p.b;
  return bp;
}

}  // namespace

OracleSolution ipo_solve(const SdpProblem& problem, Context& ctx, const std::string& kind) {
  problem.validate();
  if (problem.n() == 0) fail(ErrorKind::Precondition, "ipo_solve: zero-dimensional cone");
  const BlockSolution s = solve_blocks(single_block(problem), ctx, kind);
  OracleSolution out;
  out.x_star = s.x[0];
  out.y_star = s.y;
  out.s_star = s.s[0];
  out.gap = s.gap;
  out.primal_residual = s.primal_residual;
  out.primal_objective = s.primal_objective;
  out.dual_objective = s.dual_objective;
  out.iterations = s.iterations;
  return out;
}

OracleSolution ipo_solve_on_face(const SdpProblem& problem, Context& ctx, const std::string& kind) {
  problem.validate();
  const Face& f = problem.face;
  if (f.is_full()) return ipo_solve(problem, ctx, kind);
  if (f.rank() == 0) {
    if (problem.b.norm() > ctx.tol().sub) fail(ErrorKind::FaceEmpty, "ipo_solve_on_face: face {0} with b != 0");
    OracleSolution out;
    out.x_star = SymMatrix(problem.n());
    out.y_star = Eigen::VectorXd::Zero(problem.m());
    out.s_star = problem.c;
    return out;
  }
  std::vector<SymMatrix> mats;
  for (const auto& ai : problem.a.mats()) mats.push_back(f.restrict_to(ai));
  const SdpProblem reduced(LinearMapA(f.rank(), std::move(mats)), problem.b, f.restrict_to(problem.c));
  const OracleSolution r = ipo_solve(reduced, ctx, kind);
  OracleSolution out = r;
  out.x_star = f.lift(r.x_star);
  out.s_star = problem.slack(r.y_star);
  return out;
}

double ipo_sqrt(double beta, Context& ctx) {
  if (!(beta > 0.0)) fail(ErrorKind::Precondition, "ipo_sqrt: beta must be positive");
  const SymMatrix c = SymMatrix::diagonal({1.0, beta});
  const SymMatrix a1 = SymMatrix::from_rows({{0, -1}, {-1, 0}});
  const SdpProblem p(LinearMapA(2, {a1}), Eigen::VectorXd::Ones(1), c);
  return ipo_solve(p, ctx, "sqrt").y_star(0);
}

}  // namespace sdpc
