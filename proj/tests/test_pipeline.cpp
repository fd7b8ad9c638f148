#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "generators.hpp"
#include "support.hpp"
#include "sdpc/catalog.hpp"
#include "sdpc/error.hpp"
#include "sdpc/oracle.hpp"
#include "sdpc/pipeline.hpp"

using namespace sdpc;
using namespace sdpc::testing;

namespace {

/// Distance from m to the affine set c - range(A^T), by least squares in svec
/// coordinates.
double affine_distance(const SdpProblem& p, const SymMatrix& m) {
  const Eigen::MatrixXd a = p.a.svec_matrix();
  const Eigen::VectorXd r = svec(p.c - m);
  const Eigen::VectorXd y = a.completeOrthogonalDecomposition().solve(r);
  return (a * y - r).norm();
}

bool all_verify(const SdpProblem& p, const SolveReport& r, const ToleranceConfig& tol) {
  for (const Certificate& c : r.certificates)
    if (!verify_certificate(p, c, tol).ok) return false;
  return true;
}

bool has_chain(const SolveReport& r) {
  for (const Certificate& c : r.certificates)
    if (std::holds_alternative<ReducingChain>(c)) return true;
  return false;
}

bool has_witness(const SolveReport& r, StrongInfeasibilityWitness::Side side) {
  for (const Certificate& c : r.certificates)
    if (const auto* w = std::get_if<StrongInfeasibilityWitness>(&c); w && w->side == side) return true;
  return false;
}

SymMatrix entry(int n, int i, int j) {
  SymMatrix e(n);
  e.set(i, j, i == j ? 1.0 : 0.5);
  return e;
}

}  // namespace

TEST_CASE("pipeline: worked example") {
  Context ctx;
  const SdpProblem p = catalog::worked_example();
  const SolveReport r = complete_solve(p, ctx, {{1e-1, 1e-2, 1e-3}});
  CHECK(r.status == FeasStatus::StrongFeasible);
  REQUIRE(r.value.is_finite());
  CHECK(std::abs(r.value.value()) <= 1e-6);
  CHECK(r.attained == Attainment::No);
  CHECK_FALSE(r.solution);
  REQUIRE(r.epsilon_handle);
  REQUIRE(r.partition);
  CHECK(r.partition->blocks == std::vector<int>{1, 1});
  CHECK(has_chain(r));
  CHECK(all_verify(p, r, ctx.tol()));
  CHECK(r.consistency_errors().empty());
  CHECK_FALSE(r.contract_violation);
  REQUIRE(r.epsilon_points.size() == 3);
  for (const EpsilonPoint& e : r.epsilon_points) {
    REQUIRE(e.y);
    REQUIRE(e.objective);
    CHECK(e.kind == EpsilonPoint::Kind::Optimal);
    CHECK(min_eigenvalue(p.slack(*e.y)) >= -1e-7);
    CHECK(*e.objective >= -e.epsilon);
    CHECK(*e.objective == doctest::Approx(-e.y->sum()).epsilon(1e-12));
  }
}

TEST_CASE("pipeline: weakly infeasible instances") {
  for (const catalog::Entry& e : catalog::all()) {
    if (e.status != FeasStatus::WeakInfeasible) continue;
    CAPTURE(e.name);
    Context ctx;
    const SolveReport r = complete_solve(e.problem, ctx, {{1e-1, 1e-2, 1e-3}});
    CHECK(r.status == FeasStatus::WeakInfeasible);
    CHECK(r.value.kind() == ExtendedReal::Kind::NegInf);
    CHECK(r.attained == Attainment::NotApplicable);
    CHECK(has_chain(r));
    CHECK(all_verify(e.problem, r, ctx.tol()));
    CHECK(r.consistency_errors().empty());
    REQUIRE(r.epsilon_handle);
    REQUIRE(r.epsilon_points.size() == 3);
    for (const EpsilonPoint& pt : r.epsilon_points) {
      CHECK(pt.kind == EpsilonPoint::Kind::NearFeasible);
      REQUIRE(pt.y);
      CHECK(pt.dist_to_psd <= pt.epsilon);
      // Independent distance: the negative eigenvalues of the point.
      const EigenDecomposition ed = eig_sym(pt.matrix);
      CHECK(ed.values.cwiseMin(0.0).norm() <= pt.epsilon);
      CHECK(affine_distance(e.problem, pt.matrix) <= 1e-9 * (1.0 + pt.matrix.frobenius_norm()));
      CHECK((e.problem.slack(*pt.y) - pt.matrix).frobenius_norm() <= 1e-12 * (1.0 + pt.matrix.frobenius_norm()));
    }
  }
}

TEST_CASE("pipeline: scaled and rotated 2x2 weak infeasibility") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  std::uniform_real_distribution<double> angle(0.0, 3.14);
  for (int t = 0; t < 60; ++t) {
    const double s = scale(rng);
    const double a = angle(rng);
    CAPTURE(s);
    CAPTURE(a);
    const SdpProblem p = catalog::weak_infeasible_2x2(s, a);
    Context ctx;
    const SolveReport r = complete_solve(p, ctx, {{1e-3, 1e-5}});
    CHECK(r.status == FeasStatus::WeakInfeasible);
    CHECK(all_verify(p, r, ctx.tol()));
    for (const EpsilonPoint& pt : r.epsilon_points) {
      CHECK(eig_sym(pt.matrix).values.cwiseMin(0.0).norm() <= pt.epsilon);
      CHECK(affine_distance(p, pt.matrix) <= 1e-9 * (1.0 + pt.matrix.frobenius_norm()));
    }
  }
}

TEST_CASE("pipeline: strongly infeasible instances carry a witness") {
  for (const catalog::Entry& e : catalog::all()) {
    if (e.status != FeasStatus::StrongInfeasible) continue;
    CAPTURE(e.name);
    Context ctx;
    const SolveReport r = complete_solve(e.problem, ctx);
    CHECK(r.status == FeasStatus::StrongInfeasible);
    CHECK(r.value.kind() == ExtendedReal::Kind::NegInf);
    CHECK(has_witness(r, StrongInfeasibilityWitness::Side::Dual));
    CHECK(all_verify(e.problem, r, ctx.tol()));
    CHECK_FALSE(r.epsilon_handle);
  }
}

TEST_CASE("pipeline: planted optimum is attained") {
  std::mt19937 rng(2024);
  for (int t = 0; t < 12; ++t) {
    const int n = 2 + t % 4;
    const int rank_x = 1 + t % (n - 1);
    const int m = std::min(svec_dim(n) - 1, 2 + t % 4);
    const PlantedOptimum po = planted_optimum(rng, n, m, rank_x);
    CAPTURE(t);
    Context ctx;
    const SolveReport r = complete_solve(po.problem, ctx);
    REQUIRE(r.value.is_finite());
    CHECK(std::abs(r.value.value() - po.value) <= 1e-7 * (1.0 + std::abs(po.value)));
    REQUIRE(r.attained == Attainment::Yes);
    REQUIRE(r.solution);
    REQUIRE(r.solution->y);
    CHECK(min_eigenvalue(po.problem.slack(*r.solution->y)) >= -1e-7);
    CHECK(r.solution->rank == n - rank_x);
    CHECK(all_verify(po.problem, r, ctx.tol()));
    CHECK(r.consistency_errors().empty());
  }
}

TEST_CASE("pipeline: planted optimum with nearly square constraint maps") {
  std::mt19937 rng(99);
  for (int t = 0; t < 80; ++t) {
    const int n = uniform_int(rng, 3, 5);
    const int rank_x = uniform_int(rng, 1, n - 1);
    const int hi = std::min(10, svec_dim(n) - 1);
    const int m = uniform_int(rng, hi - 3, hi);
    const PlantedOptimum po = planted_optimum(rng, n, m, rank_x);
    CAPTURE(t);
    Context ctx;
    const SolveReport r = complete_solve(po.problem, ctx);
    REQUIRE(r.value.is_finite());
    CHECK(std::abs(r.value.value() - po.value) <= 1e-6 * (1.0 + std::abs(po.value)));
    CHECK(r.attained == Attainment::Yes);
    if (r.solution && r.solution->y) {
      CHECK(min_eigenvalue(po.problem.slack(*r.solution->y)) >= -1e-7 * (1.0 + po.problem.c.frobenius_norm()));
    }
    CHECK(all_verify(po.problem, r, ctx.tol()));
  }
}

TEST_CASE("pipeline: strict pair agrees with a direct oracle solve") {
  std::mt19937 rng(77);
  for (int t = 0; t < 8; ++t) {
    const StrictPair sp = strict_pair(rng, 2 + t % 3, 1 + t % 3);
    Context direct;
    const OracleSolution o = ipo_solve(sp.problem, direct);
    Context ctx;
    const SolveReport r = complete_solve(sp.problem, ctx);
    CHECK(r.status == FeasStatus::StrongFeasible);
    REQUIRE(r.value.is_finite());
    CHECK(r.value.value() == doctest::Approx(o.dual_objective).epsilon(1e-6));
    CHECK(r.attained == Attainment::Yes);
  }
}

TEST_CASE("pipeline: unbounded instances") {
  Context ctx;
  const catalog::Entry e = catalog::find("unbounded-3");
  const SolveReport r = complete_solve(e.problem, ctx);
  CHECK(r.value.kind() == ExtendedReal::Kind::PosInf);
  CHECK(r.status == FeasStatus::StrongFeasible);
  CHECK(has_witness(r, StrongInfeasibilityWitness::Side::Primal));
  CHECK(all_verify(e.problem, r, ctx.tol()));

  // Slacks diag(y1, -y1): only y1 = 0 is feasible, while y2 is free.
  const SdpProblem q(LinearMapA(2, {SymMatrix::diagonal({-1.0, 1.0}), SymMatrix(2)}), Eigen::Vector2d(0.0, 1.0),
                     SymMatrix(2));
  Context ctx2;
  const SolveReport rq = complete_solve(q, ctx2);
  CHECK(rq.status == FeasStatus::WeakFeasible);
  CHECK(rq.value.kind() == ExtendedReal::Kind::PosInf);
  CHECK(has_witness(rq, StrongInfeasibilityWitness::Side::Primal));
  CHECK(all_verify(q, rq, ctx2.tol()));
}

TEST_CASE("pipeline: duality gap family recovers the dual value") {
  for (const auto& [g, v] : std::vector<std::pair<double, double>>{{1.0, 2.0}, {5.0, -1.0}, {0.5, 0.25}}) {
    Context ctx;
    const SdpProblem p = catalog::duality_gap(g, v);
    const SolveReport r = complete_solve(p, ctx);
    REQUIRE(r.value.is_finite());
    CHECK(std::abs(r.value.value() - v) <= 1e-6);
    CHECK(r.status == FeasStatus::WeakFeasible);
    CHECK(all_verify(p, r, ctx.tol()));
  }
}

TEST_CASE("pipeline: whole catalog") {
  const auto entries = catalog::all();
  CHECK(entries.size() >= 20);
  int seen[4] = {0, 0, 0, 0};
  for (const catalog::Entry& e : entries) {
    CAPTURE(e.name);
    Context ctx;
    const SolveReport r = complete_solve(e.problem, ctx, {{1e-2}});
    CHECK(r.status == e.status);
    ++seen[static_cast<int>(r.status)];
    if (e.value) {
      CHECK(r.value.kind() == e.value->kind());
      if (e.value->is_finite() && r.value.is_finite()) CHECK(std::abs(r.value.value() - e.value->value()) <= 1e-6);
    }
    if (e.attained) CHECK(r.attained == *e.attained);
    CHECK(all_verify(e.problem, r, ctx.tol()));
    CHECK(r.consistency_errors().empty());
    CHECK_FALSE(r.contract_violation);
  }
  for (int k = 0; k < 4; ++k) CHECK(seen[k] > 0);
}

TEST_CASE("pipeline: deterministic") {
  for (const char* name : {"worked-example", "weak-infeas-3x3", "duality-gap"}) {
    const SdpProblem p = catalog::find(name).problem;
    Context c1, c2;
    const SolveReport a = complete_solve(p, c1, {{1e-3}});
    const SolveReport b = complete_solve(p, c2, {{1e-3}});
    CHECK(a.status == b.status);
    CHECK(a.value.to_string() == b.value.to_string());
    CHECK(a.oracle_calls == b.oracle_calls);
    REQUIRE(a.epsilon_points.size() == b.epsilon_points.size());
    for (size_t i = 0; i < a.epsilon_points.size(); ++i)
      CHECK((a.epsilon_points[i].matrix - b.epsilon_points[i].matrix).frobenius_norm() == 0.0);
  }
}

TEST_CASE("pipeline: trivial shapes") {
  Context ctx;
  const SdpProblem fixed(LinearMapA(2, {}), Eigen::VectorXd(0), SymMatrix::diagonal({1.0, 0.0}));
  const SolveReport r = complete_solve(fixed, ctx);
  CHECK(r.status == FeasStatus::WeakFeasible);
  CHECK(r.value.is_finite());
  CHECK(r.attained == Attainment::Yes);

  const SdpProblem bad(LinearMapA(2, {}), Eigen::VectorXd(0), SymMatrix::diagonal({1.0, -2.0}));
  const SolveReport rb = complete_solve(bad, ctx);
  CHECK(rb.status == FeasStatus::StrongInfeasible);
  CHECK(all_verify(bad, rb, ctx.tol()));
}

TEST_CASE("pipeline: oracle failures name the step") {
  ToleranceConfig tol;
  tol.max_iter = 1;
  Context ctx(tol);
  try {
    complete_solve(catalog::worked_example(), ctx);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("pipeline step 1") != std::string::npos);
  }
}

TEST_CASE("primal form: no constraints, zero objective") {
  Context ctx;
  const SdpProblem p(LinearMapA(2, {}), Eigen::VectorXd(0), SymMatrix(2), Orientation::Primal);
  const SolveReport r = solve(p, ctx);
  CHECK(r.orientation == Orientation::Primal);
  CHECK(r.status == FeasStatus::StrongFeasible);
  REQUIRE(r.value.is_finite());
  CHECK(std::abs(r.value.value()) <= 1e-9);
  CHECK(r.attained == Attainment::Yes);
}

TEST_CASE("primal form: inconsistent equations") {
  Context ctx;
  // x11 = 1 and x11 = 2.
  const SdpProblem p(LinearMapA(2, {entry(2, 0, 0), entry(2, 0, 0)}), Eigen::Vector2d(1.0, 2.0), SymMatrix(2),
                     Orientation::Primal);
  const SolveReport r = solve(p, ctx);
  CHECK(r.status == FeasStatus::StrongInfeasible);
  CHECK(r.value.kind() == ExtendedReal::Kind::PosInf);
  CHECK(has_witness(r, StrongInfeasibilityWitness::Side::Primal));
  CHECK(all_verify(p, r, ctx.tol()));
  CHECK(r.consistency_errors().empty());
}

TEST_CASE("primal form: strict pair matches the dual value") {
  std::mt19937 rng(5);
  for (int t = 0; t < 6; ++t) {
    StrictPair sp = strict_pair(rng, 2 + t % 3, 1 + t % 2);
    Context direct;
    const OracleSolution o = ipo_solve(sp.problem, direct);
    sp.problem.orientation = Orientation::Primal;
    Context ctx;
    const SolveReport r = solve(sp.problem, ctx);
    CHECK(r.status == FeasStatus::StrongFeasible);
    REQUIRE(r.value.is_finite());
    CHECK(r.value.value() == doctest::Approx(o.primal_objective).epsilon(1e-6));
    REQUIRE(r.solution);
    const SymMatrix& x = r.solution->matrix;
    CHECK(min_eigenvalue(x) >= -1e-7);
    CHECK((sp.problem.a.apply(x) - sp.problem.b).norm() <= 1e-7);
    CHECK(trace_inner(sp.problem.c, x) == doctest::Approx(r.value.value()).epsilon(1e-7));
  }
}

TEST_CASE("primal form: weakly infeasible") {
  // x11 = 0 and x12 = 1: no PSD solution, but [[e, 1], [1, 1/e]] comes close.
  const SdpProblem p(LinearMapA(2, {entry(2, 0, 0), entry(2, 0, 1) * 2.0}), Eigen::Vector2d(0.0, 1.0),
                     SymMatrix(2), Orientation::Primal);
  Context ctx;
  const SolveReport r = solve(p, ctx, {{1e-1, 1e-2}});
  CHECK(r.status == FeasStatus::WeakInfeasible);
  CHECK(r.value.kind() == ExtendedReal::Kind::PosInf);
  CHECK(all_verify(p, r, ctx.tol()));
  CHECK(r.consistency_errors().empty());
  REQUIRE(r.epsilon_points.size() == 2);
  for (const EpsilonPoint& pt : r.epsilon_points) {
    CHECK(pt.dist_to_psd <= pt.epsilon);
    CHECK((p.a.apply(pt.matrix) - p.b).norm() <= 1e-9);
  }
}

TEST_CASE("primal form: unbounded below") {
  // inf -x11 s.t. x22 = 1.
  const SdpProblem p(LinearMapA(2, {entry(2, 1, 1)}), Eigen::VectorXd::Ones(1), SymMatrix::diagonal({-1.0, 0.0}),
                     Orientation::Primal);
  Context ctx;
  const SolveReport r = solve(p, ctx);
  CHECK(r.status == FeasStatus::StrongFeasible);
  CHECK(r.value.kind() == ExtendedReal::Kind::NegInf);
  CHECK(has_witness(r, StrongInfeasibilityWitness::Side::Dual));
  CHECK(all_verify(p, r, ctx.tol()));
}
