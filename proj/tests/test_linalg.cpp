#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sdpc/error.hpp"
#include "sdpc/linalg.hpp"
#include "support.hpp"

using namespace sdpc;
using sdpc::testing::random_orthogonal;
using sdpc::testing::random_psd;
using sdpc::testing::random_sym;

TEST_CASE("trace_inner") {
  CHECK(trace_inner(SymMatrix::identity(3), SymMatrix::identity(3)) == doctest::Approx(3.0));
  std::mt19937 rng(1);
  CHECK(trace_inner(SymMatrix(3), random_sym(rng, 3)) == 0.0);
  const SymMatrix d1 = SymMatrix::diagonal({1, 0, 0});
  const SymMatrix d2 = SymMatrix::from_rows({{0, 0, 1}, {0, 1, 0}, {1, 0, 0}});
  CHECK(trace_inner(d1, d2) == 0.0);
  CHECK(trace_inner(SymMatrix(0), SymMatrix(0)) == 0.0);
  CHECK_THROWS_AS(trace_inner(SymMatrix(2), SymMatrix(3)), Error);
}

TEST_CASE("principal blocks") {
  std::mt19937 rng(2);
  const SymMatrix x = random_sym(rng, 3);
  CHECK(pi_upper(x, 0).n() == 0);
  CHECK((pi_upper(x, 3) - x).frobenius_norm() == 0.0);
  SymMatrix seven(3);
  seven.set(0, 0, 7.0);
  CHECK(pi_upper(seven, 1)(0, 0) == 7.0);
  CHECK(pi_lower(x, 3).n() == 0);
  CHECK((pi_lower(x, 0) - x).frobenius_norm() == 0.0);
  const SymMatrix lower = pi_lower(SymMatrix::diagonal({1, 2, 3}), 1);
  CHECK((lower - SymMatrix::diagonal({2, 3})).frobenius_norm() == 0.0);
  CHECK_THROWS_AS(pi_upper(x, 4), Error);
  CHECK_THROWS_AS(pi_lower(x, -1), Error);

  // Slack of the worked reformulated example at y0 = -2: lower 1x1 block is [-y0].
  const double y0 = -2.0, y2 = 0.3, y3 = 0.1;
  const SymMatrix s = SymMatrix::from_rows({{-y0 - y2 - y3, 1, y2}, {1, y2, 1}, {y2, 1, -y0}});
  CHECK(pi_lower(s, 2)(0, 0) == doctest::Approx(-y0));

  for (int r = 0; r <= 3; ++r) {
    const SymMatrix block = direct_sum(pi_upper(x, r), pi_lower(x, r));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const bool same_block = (i < r) == (j < r);
        CHECK(block(i, j) == (same_block ? x(i, j) : 0.0));
      }
  }
  const SymMatrix bd = direct_sum(SymMatrix::diagonal({1, 2}), SymMatrix::diagonal({3}));
  CHECK((direct_sum(pi_upper(bd, 2), pi_lower(bd, 2)) - bd).frobenius_norm() == 0.0);
}

TEST_CASE("rotate") {
  std::mt19937 rng(3);
  const SymMatrix x = random_sym(rng, 4);
  CHECK((rotate(x, OrthogonalMatrix::identity(4)) - x).frobenius_norm() < 1e-14);
  const OrthogonalMatrix q = random_orthogonal(rng, 4);
  CHECK((rotate(rotate(x, q), q.transpose()) - x).frobenius_norm() < 1e-12);
  Eigen::MatrixXd swap(2, 2);
  swap << 0, 1, 1, 0;
  const SymMatrix r = rotate(SymMatrix::diagonal({0, 1}), OrthogonalMatrix(swap));
  CHECK((r - SymMatrix::diagonal({1, 0})).frobenius_norm() == 0.0);
  CHECK_THROWS_AS(rotate(x, OrthogonalMatrix::identity(3)), Error);
  const SymMatrix stored = rotate(random_sym(rng, 5), random_orthogonal(rng, 5));
  CHECK((stored.dense() - stored.dense().transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("orthogonal invariance of the inner product") {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = sdpc::testing::uniform_int(rng, 1, 8);
    const SymMatrix a = random_sym(rng, n), b = random_sym(rng, n);
    const OrthogonalMatrix q = random_orthogonal(rng, n);
    CHECK(std::abs(trace_inner(rotate(a, q), rotate(b, q)) - trace_inner(a, b)) < 1e-10);
  }
}

TEST_CASE("OrthogonalMatrix rejects non-orthogonal input") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  m(0, 1) = 1e-6;
  CHECK_THROWS_AS(OrthogonalMatrix{m}, Error);
}

TEST_CASE("eig_sym") {
  auto e = eig_sym(SymMatrix::diagonal({1, 3}));
  CHECK(e.values(0) == doctest::Approx(3));
  CHECK(e.values(1) == doctest::Approx(1));
  e = eig_sym(SymMatrix::from_rows({{0, 1}, {1, 0}}));
  CHECK(e.values(0) == doctest::Approx(1));
  CHECK(e.values(1) == doctest::Approx(-1));
  e = eig_sym(SymMatrix::from_rows({{1, 1}, {1, 1}}));
  CHECK(e.values(0) == doctest::Approx(2));
  CHECK(std::abs(e.values(1)) < 1e-14);

  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const SymMatrix x = random_sym(rng, 6);
    const auto d = eig_sym(x);
    const Eigen::MatrixXd rec = d.vectors.dense() * d.values.asDiagonal() * d.vectors.dense().transpose();
    CHECK((rec - x.dense()).norm() <= 1e-10 * (1 + d.values.cwiseAbs().maxCoeff()));
    for (int i = 0; i + 1 < 6; ++i) CHECK(d.values(i) >= d.values(i + 1));
  }
}

TEST_CASE("numeric_rank and dist_to_psd") {
  ToleranceConfig tol;
  CHECK(dist_to_psd(SymMatrix::diagonal({1, -2})) == doctest::Approx(2.0));
  std::mt19937 rng(6);
  CHECK(dist_to_psd(random_psd(rng, 4, 4)) == 0.0);
  // threshold = 1e-9 + 1e-9 * 1 = 2e-9 > 1e-14
  CHECK(tol.rank_threshold(1.0) == doctest::Approx(2e-9));
  CHECK(numeric_rank(SymMatrix::diagonal({1, 1e-14}), tol) == 1);
  CHECK(numeric_rank(SymMatrix::diagonal({1, 1e-8}), tol) == 2);

  for (int trial = 0; trial < 50; ++trial) {
    const int n = sdpc::testing::uniform_int(rng, 1, 6);
    SymMatrix x = random_sym(rng, n);
    const double lmin = min_eigenvalue(x);
    const double scale = max_abs_eigenvalue(x);
    const double cut = tol.rank_threshold(scale);
    // dist == 0 iff lambda_min >= 0; shifting to exactly -cut/2 keeps it inside the rank band.
    if (lmin < -cut) {
      CHECK(dist_to_psd(x) > 0.0);
    }
    const SymMatrix psd = x - SymMatrix::identity(n) * lmin;
    CHECK(dist_to_psd(psd) <= 1e-12 * (1 + scale));
  }
}

TEST_CASE("kernel_completion") {
  ToleranceConfig tol;
  auto u = kernel_completion(SymMatrix::diagonal({0, 5}), 1, tol);
  const SymMatrix r = rotate(SymMatrix::diagonal({0, 5}), u);
  CHECK(r(0, 0) == doctest::Approx(5));
  CHECK(std::abs(r(1, 1)) < 1e-12);

  u = kernel_completion(SymMatrix::identity(3), 3, tol);
  CHECK((u.dense() - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);

  std::mt19937 rng(7);
  const Eigen::VectorXd v = sdpc::testing::gaussian_vec(rng, 4).normalized();
  const SymMatrix vv(Eigen::MatrixXd(v * v.transpose()));
  u = kernel_completion(vv, 1, tol);
  CHECK(std::abs(std::abs(u.dense().col(0).dot(v)) - 1.0) < 1e-12);
  CHECK(pi_upper(rotate(vv, u), 1)(0, 0) == doctest::Approx(1.0));

  CHECK_THROWS_AS(kernel_completion(SymMatrix::diagonal({1, 1}), 1, tol), Error);

  for (int trial = 0; trial < 100; ++trial) {
    const int n = sdpc::testing::uniform_int(rng, 1, 7);
    const int k = sdpc::testing::uniform_int(rng, 0, n);
    const SymMatrix x = random_psd(rng, n, k);
    const OrthogonalMatrix w = kernel_completion(x, k, tol);
    const SymMatrix rx = rotate(x, w);
    if (k > 0) CHECK(min_eigenvalue(pi_upper(rx, k)) > 0.0);
    if (k < n) CHECK(pi_lower(rx, k).frobenius_norm() <= 1e-10 * (1 + x.frobenius_norm()));
  }
}

TEST_CASE("svec is an isometry") {
  std::mt19937 rng(8);
  const SymMatrix a = random_sym(rng, 4), b = random_sym(rng, 4);
  CHECK(svec(a).dot(svec(b)) == doctest::Approx(trace_inner(a, b)));
  CHECK((smat(svec(a), 4) - a).frobenius_norm() < 1e-14);
}

TEST_CASE("least squares") {
  std::mt19937 rng(9);
  const Eigen::MatrixXd m = sdpc::testing::gaussian(rng, 5, 3);
  const Eigen::VectorXd x0 = sdpc::testing::gaussian_vec(rng, 3);
  const auto ls = least_squares(m, m * x0, 1e-12);
  CHECK((ls.x - x0).norm() < 1e-10);
  CHECK(ls.rank == 3);
  CHECK(ls.null_basis.cols() == 0);
  Eigen::MatrixXd wide(1, 2);
  wide << 1, 1;
  const auto w = least_squares(wide, Eigen::VectorXd::Constant(1, 2.0), 1e-12);
  CHECK(w.x(0) == doctest::Approx(1.0));
  CHECK(w.null_basis.cols() == 1);
}
