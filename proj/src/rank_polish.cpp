#include "rank_polish.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdpc {

SymMatrix combination(const std::vector<SymMatrix>& mats, const Eigen::VectorXd& beta, int n) {
  SymMatrix out(n);
  for (std::size_t j = 0; j < mats.size(); ++j) out += mats[j] * beta(j);
  return out;
}

std::optional<Polished> polish_rank(const std::vector<SymMatrix>& mats, const Eigen::VectorXd& beta0, int k, int p,
                                    const ToleranceConfig& tol, double stall) {
  const int m = static_cast<int>(mats.size());
  Polished out{beta0, eig_sym(combination(mats, beta0, p))};
  const double vk0 = out.ed.values(k - 1);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const double top = out.ed.values(0);
    if (!(top > 0.0) || out.ed.values(k - 1) <= tol.face * top) return std::nullopt;
    if (k == p) return out;
    const Eigen::MatrixXd v = out.ed.vectors.trailing(k);
    Eigen::MatrixXd cmap(svec_dim(p - k), m);
    for (int q = 0; q < m; ++q) cmap.col(q) = svec(congruence(mats[q], v));
    const Eigen::VectorXd tail = cmap * out.beta;
    const double t = tail.norm();
    if (t <= 1e-14 * top || t > stall * prev) {
      double scale = top;
      for (int q = 0; q < m; ++q) scale = std::max(scale, std::abs(out.beta(q)) * mats[q].frobenius_norm());
      if (t > 1e-12 * scale || out.ed.values(k - 1) < 0.5 * vk0) return std::nullopt;
      return out;
    }
    prev = t;
    out.beta -= least_squares(cmap, tail, tol.face).x;
    out.ed = eig_sym(combination(mats, out.beta, p));
  }
  return std::nullopt;
}

}  // namespace sdpc
