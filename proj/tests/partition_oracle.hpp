#pragma once

#include <string>
#include <vector>

#include "support.hpp"
#include "sdpc/partition.hpp"

namespace sdpc::testing {

inline double residual_in_span(const SymMatrix& x, const std::vector<SymMatrix>& mats) {
  Eigen::MatrixXd cols(svec_dim(x.n()), mats.size());
  for (std::size_t j = 0; j < mats.size(); ++j) cols.col(j) = svec(mats[j]);
  return cols.cols() == 0 ? svec(x).norm() : least_squares(cols, svec(x), 1e-12).residual;
}

inline double span_scale(const std::vector<SymMatrix>& mats) {
  double s = 1.0;
  for (const auto& m : mats) s = std::max(s, m.frobenius_norm());
  return s;
}

/// The four structural invariants of a hyper feasible partition, plus
/// membership of the dirs in P^T L P. Empty when all hold.
inline std::vector<std::string> partition_violations(const HyperFeasiblePartition& part,
                                                     const std::vector<SymMatrix>& mats, int n, Context& ctx) {
  std::vector<std::string> bad;
  const auto expect = [&](bool ok, const std::string& what) {
    if (!ok) bad.push_back(what);
  };
  const int l = part.size();
  expect(l >= 1, "empty partition");
  expect(l == static_cast<int>(part.blocks.size()), "block count");
  expect(l <= std::max(1, n - 1), "more than n - 1 blocks");
  int s = 0;
  for (int i = 0; i < l; ++i) {
    const std::string tag = "block " + std::to_string(i + 1) + ": ";
    const SymMatrix& d = part.dirs[i];
    const double scale = 1.0 + d.frobenius_norm();
    const SymMatrix back = rotate(d, part.p.transpose());
    expect(residual_in_span(back, mats) <= 1e-9 * scale * span_scale(mats), tag + "direction outside the subspace");
    const SymMatrix tail = pi_lower(d, s);
    if (i == 0) expect(min_eigenvalue(d) >= -1e-9 * scale, tag + "first direction not PSD");
    expect(part.blocks[i] >= 1, tag + "empty block");
    expect(min_eigenvalue(pi_upper(tail, part.blocks[i])) > 1e-8 * scale, tag + "leading block not definite");
    const SymMatrix zero_part = pi_lower(d, s + part.blocks[i]);
    const Eigen::MatrixXd off = tail.dense().topRightCorner(part.blocks[i], tail.n() - part.blocks[i]);
    expect(zero_part.frobenius_norm() <= 1e-9 * scale, tag + "trailing block not zero");
    expect(off.norm() <= 1e-9 * scale, tag + "coupling to the trailing block not zero");
    s += part.blocks[i];
  }
  expect(s == part.s, "block sizes do not add up to s");
  if (part.s < n) {
    std::vector<SymMatrix> images;
    for (const auto& b : mats) images.push_back(pi_lower(rotate(b, part.p), part.s));
    expect(!find_nonzero_psd(images, n - part.s, ctx).has_value(), "not maximal");
  }
  return bad;
}

/// Nested block-triangular family in rotated coordinates plus optional
/// extras living in the residual block.
inline std::vector<SymMatrix> planted_subspace(std::mt19937& rng, int n, int& planted_blocks) {
  const OrthogonalMatrix q = random_orthogonal(rng, n);
  std::vector<SymMatrix> mats;
  int s = 0;
  planted_blocks = 0;
  const int max_blocks = uniform_int(rng, 1, 3);
  while (planted_blocks < max_blocks && s < n - 1) {
    const int k = uniform_int(rng, 1, std::max(1, (n - 1 - s) / 2));
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    d.topLeftCorner(s, s) = gaussian(rng, s, s);
    d.block(0, s, s, k) = gaussian(rng, s, k);
    d.block(s, s, k, k) = random_pd(rng, k).dense();
    // Coupling into the zero trailing block keeps earlier-block combinations
    // from absorbing this direction.
    if (s > 0) d.block(0, s + k, s, n - s - k) = gaussian(rng, s, n - s - k);
    d = (d + d.transpose().eval()) / 2;
    mats.push_back(rotate(SymMatrix(Eigen::MatrixXd(d)), q.transpose()));
    s += k;
    ++planted_blocks;
  }
  if (s < n && uniform_int(rng, 0, 1) == 1) {
    // Trace-zero diagonal in the residual block keeps it PSD-free.
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    if (n - s >= 2) {
      d(s, s) = 1.0;
      d(n - 1, n - 1) = -1.0;
      d.topRightCorner(s, n - s) = gaussian(rng, s, n - s);
      d = (d + d.transpose().eval()) / 2;
      mats.push_back(rotate(SymMatrix(Eigen::MatrixXd(d)), q.transpose()));
    }
  }
  return mats;
}

}  // namespace sdpc::testing
