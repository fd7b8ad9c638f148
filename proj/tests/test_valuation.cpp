#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"
#include "support.hpp"
#include "sdpc/catalog.hpp"
#include "sdpc/error.hpp"
#include "sdpc/valuation.hpp"

using namespace sdpc;
using namespace sdpc::testing;

namespace {

SdpProblem random_problem(std::mt19937& rng, int n, const Eigen::VectorXd& b) {
  std::vector<SymMatrix> mats;
  for (int i = 0; i < b.size(); ++i) mats.push_back(random_sym(rng, n));
  return SdpProblem(LinearMapA(n, mats), b, random_sym(rng, n));
}

double slack_mismatch(const SdpProblem& p, const NormalizedObjective& norm, const Eigen::VectorXd& w) {
  return (norm.ref.slack(w) - p.slack(norm.to_original(w))).frobenius_norm();
}

/// Feasible point of the cut problem with definite trailing slack, lifted to
/// the reference problem by completing along the partition.
Eigen::VectorXd lift(const SdpProblem& ref, const Valuation& v, const Eigen::VectorXd& w, const ToleranceConfig& tol) {
  Eigen::VectorXd out = w;
  if (!v.partition) return out;
  const Eigen::VectorXd alpha = psd_complete(rotated_slack(ref, v, w), *v.partition, tol);
  out.tail(out.size() - 1) -= v.partition->coef * alpha;
  return out;
}

}  // namespace

TEST_CASE("normalize_objective: unit objective leaves the data alone") {
  std::mt19937 rng(1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  b(0) = 1.0;
  const SdpProblem p = random_problem(rng, 3, b);
  const NormalizedObjective norm = normalize_objective(p);
  CHECK(norm.pivot == 0);
  for (int i = 0; i < 3; ++i) CHECK((norm.ref.a[i] - p.a[i]).frobenius_norm() == doctest::Approx(0.0));
  const Eigen::VectorXd y = gaussian_vec(rng, 3);
  CHECK((norm.to_original(y) - y).norm() < 1e-14);
}

TEST_CASE("normalize_objective: b = (1, 2) substitution") {
  std::mt19937 rng(2);
  const SdpProblem p = random_problem(rng, 3, Eigen::Vector2d(1.0, 2.0));
  const NormalizedObjective norm = normalize_objective(p);
  CHECK(norm.pivot == 1);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd y = gaussian_vec(rng, 2);
    // c - A_1 y_1 - A_2 y_2 with y_1 = y_0 - 2 y_2, written in (y_0, y_2).
    const double y0 = y(0) + 2.0 * y(1);
    const SymMatrix direct = p.c - (p.a[0] * (y0 - 2.0 * y(1)) + p.a[1] * y(1));
    const Eigen::VectorXd w = norm.from_original(y);
    CHECK(w(0) == doctest::Approx(y0));
    CHECK((norm.ref.slack(w) - direct).frobenius_norm() < 1e-12);
    CHECK((norm.to_original(w) - y).norm() < 1e-12);
    CHECK(slack_mismatch(p, norm, w) < 1e-12);
  }
}

TEST_CASE("normalize_objective: random objectives keep slacks and values") {
  std::mt19937 rng(3);
  for (int t = 0; t < 20; ++t) {
    const int m = 1 + t % 5;
    const SdpProblem p = random_problem(rng, 4, gaussian_vec(rng, m));
    const NormalizedObjective norm = normalize_objective(p);
    CHECK(std::abs(p.b(norm.pivot)) == doctest::Approx(p.b.cwiseAbs().maxCoeff()));
    const Eigen::VectorXd w = gaussian_vec(rng, m);
    CHECK(slack_mismatch(p, norm, w) < 1e-10);
    CHECK(p.b.dot(norm.to_original(w)) == doctest::Approx(w(0)));
  }
}

TEST_CASE("normalize_objective: zero objective is rejected") {
  std::mt19937 rng(4);
  const SdpProblem p = random_problem(rng, 2, Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(normalize_objective(p), Error);
}

TEST_CASE("worked example: same slack set after the change of variables") {
  const SdpProblem p = catalog::worked_example();
  const NormalizedObjective norm = normalize_objective(p);
  CHECK(norm.pivot == 0);
  std::mt19937 rng(5);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd w = gaussian_vec(rng, 3);
    CHECK(slack_mismatch(p, norm, w) < 1e-12);
    // Maximizing y_0 is maximizing -y1 - y2 - y3.
    const Eigen::VectorXd y = norm.to_original(w);
    CHECK(-y.sum() == doctest::Approx(w(0)));
  }
}

TEST_CASE("worked example: value zero through the cut problem") {
  Context ctx;
  const SdpProblem p = catalog::worked_example();
  const NormalizedObjective norm = normalize_objective(p);
  const Valuation v = reduce_and_value(norm.ref, ctx);
  REQUIRE(v.partition);
  CHECK(v.partition->blocks == std::vector<int>{1, 1});
  CHECK(v.s == 2);
  CHECK(v.small.n() == 1);
  CHECK(v.branch == Valuation::Branch::Finite);
  REQUIRE(v.theta.is_finite());
  CHECK(std::abs(v.theta.value()) <= 1e-6);

  // y_0 = -1 leaves the 1x1 cut slack at 1; its completion is feasible for
  // the reference problem with the same y_0.
  for (double y0 : {-1.0, -0.1, -1e-3}) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
    w(0) = y0;
    REQUIRE(min_eigenvalue(pi_lower(rotated_slack(norm.ref, v, w), v.s)) > 0.0);
    const Eigen::VectorXd lifted = lift(norm.ref, v, w, ctx.tol());
    CHECK(lifted(0) == doctest::Approx(y0));
    CHECK(min_eigenvalue(norm.ref.slack(lifted)) > 0.0);
  }
}

TEST_CASE("unbounded toy: zero data over S^1") {
  Context ctx;
  const SdpProblem p(LinearMapA(1, {SymMatrix(1)}), Eigen::VectorXd::Ones(1), SymMatrix(1));
  const Valuation v = reduce_and_value(normalize_objective(p).ref, ctx);
  CHECK(v.theta == ExtendedReal::pos_inf());
  CHECK(v.branch == Valuation::Branch::LinearInfeasible);
  CHECK(v.ray(0) == doctest::Approx(1.0));
  CHECK(v.full_ray);
  CHECK(ctx.oracle_calls() == 0);
}

TEST_CASE("unbounded: improving ray along w w^T") {
  for (std::uint32_t seed : {7u, 8u, 9u}) {
    Context ctx;
    const SdpProblem p = catalog::unbounded(seed, 3);
    const NormalizedObjective norm = normalize_objective(p);
    const Valuation v = reduce_and_value(norm.ref, ctx);
    CHECK(v.theta == ExtendedReal::pos_inf());
    CHECK(v.branch == Valuation::Branch::ImprovingRay);
    REQUIRE(v.full_ray);
    const Eigen::VectorXd y = norm.to_original(*v.full_ray);
    CHECK(p.b.dot(y) == doctest::Approx(1.0));
    CHECK(min_eigenvalue(-p.a.adjoint(y)) >= -1e-8);
  }
}

TEST_CASE("unbounded: cut ray completed along the partition") {
  std::mt19937 rng(11);
  for (int t = 0; t < 10; ++t) {
    Context ctx;
    const int n = 2 + t % 4;
    const SdpProblem p = coupled_unbounded(rng, n);
    const NormalizedObjective norm = normalize_objective(p);
    const Valuation v = reduce_and_value(norm.ref, ctx);
    CHECK(v.theta == ExtendedReal::pos_inf());
    CHECK(v.s == 1);
    CHECK(v.branch == Valuation::Branch::ImprovingRay);
    REQUIRE(v.full_ray);
    const Eigen::VectorXd y = norm.to_original(*v.full_ray);
    CHECK(p.b.dot(y) == doctest::Approx(1.0));
    CHECK(min_eigenvalue(-p.a.adjoint(y)) >= -1e-8);
    // The uncut ray alone is not enough: the (1,1) entry of its slack is zero
    // while the first row is not.
    CHECK(min_eigenvalue(-p.a.adjoint(norm.to_original(v.ray))) < 0.0);
  }
}

TEST_CASE("planted optimum: value matches the construction") {
  std::mt19937 rng(2025);
  int checked = 0;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 4;
    const int m = std::min(svec_dim(n) - 1, 2 + t % 5);
    const int rank_x = 1 + t % 2;
    if (rank_x * (rank_x + 1) / 2 >= m) continue;
    const PlantedOptimum po = planted_optimum(rng, n, m, rank_x);
    if (po.problem.b.norm() < 1e-3) continue;
    Context ctx;
    const NormalizedObjective norm = normalize_objective(po.problem);
    const Valuation v = reduce_and_value(norm.ref, ctx);
    REQUIRE(v.theta.is_finite());
    CHECK(std::abs(v.theta.value() - po.value) <= 1e-7 * (1.0 + std::abs(po.value)));
    // Never below a known feasible value.
    CHECK(v.theta.value() >= po.problem.b.dot(po.y_star) - 1e-7);
    REQUIRE(v.small_solution);
    const Eigen::VectorXd y = norm.to_original(v.small_solution->y_star);
    if (!v.partition) CHECK(min_eigenvalue(po.problem.slack(y)) >= -1e-7);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("strict pairs: sampled interior points never beat the value") {
  std::mt19937 rng(31);
  for (int t = 0; t < 10; ++t) {
    const StrictPair sp = strict_pair(rng, 3 + t % 3, 2 + t % 4);
    if (sp.problem.b.norm() < 1e-3) continue;
    Context ctx;
    const NormalizedObjective norm = normalize_objective(sp.problem);
    const Valuation v = reduce_and_value(norm.ref, ctx);
    REQUIRE(v.theta.is_finite());
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd y = sp.y0 + 0.3 * gaussian_vec(rng, sp.problem.m());
      if (min_eigenvalue(sp.problem.slack(y)) < 0.0) continue;
      CHECK(v.theta.value() >= sp.problem.b.dot(y) - 1e-9);
    }
  }
}
