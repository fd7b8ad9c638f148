#include "sdpc/catalog.hpp"

#include <cmath>
#include <random>

#include "sdpc/error.hpp"

namespace sdpc::catalog {

namespace {

SymMatrix unit(int n, int i, int j) {
  SymMatrix e(n);
  e.set(i, j, 1.0);
  return e;
}

Eigen::MatrixXd gaussian(std::mt19937& rng, int rows, int cols) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = d(rng);
  return m;
}

OrthogonalMatrix rotation(std::mt19937& rng, int n) {
  return OrthogonalMatrix::orthonormalized(gaussian(rng, n, n));
}

Eigen::MatrixXd plane_rotation(double angle) {
  Eigen::MatrixXd q(2, 2);
  q << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return q;
}

SdpProblem make(int n, std::vector<SymMatrix> mats, std::vector<double> b, SymMatrix c) {
  return SdpProblem(LinearMapA(n, std::move(mats)), Eigen::Map<Eigen::VectorXd>(b.data(), b.size()),
                    std::move(c));
}

SdpProblem rotated(const SdpProblem& p, const Eigen::MatrixXd& q) {
  return SdpProblem(p.a.congruence(q), p.b, congruence(p.c, q));
}

}  // namespace

SdpProblem worked_example() {
  const int n = 3;
  const SymMatrix c = SymMatrix::from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
  const SymMatrix a1 = -(unit(n, 0, 0) + unit(n, 2, 2));
  const SymMatrix a2 = -(unit(n, 0, 2) + unit(n, 1, 1) + unit(n, 2, 2));
  const SymMatrix a3 = -unit(n, 2, 2);
  return make(n, {a1, a2, a3}, {-1, -1, -1}, c);
}

SdpProblem weak_infeasible_2x2(double scale, double angle) {
  const SdpProblem base = make(2, {SymMatrix::diagonal({-1.0, 0.0})}, {1.0},
                               SymMatrix::from_rows({{0, 1}, {1, 0}}) * scale);
  return rotated(base, plane_rotation(angle));
}

PlantedFace planted_face(std::uint32_t seed, int n, int k) {
  if (n < 1 || k < 0 || k > n) fail(ErrorKind::OutOfRange, "planted_face: need 0 <= k <= n, n >= 1");
  std::mt19937 rng(seed);
  std::bernoulli_distribution coin(0.5);
  // Slack M(y): leading k x k block I_k plus free off-diagonal entries, M_nn = 0,
  // and M_jj = M_{j+1,j} = y_j for j = k..n-2 (0-based), so PSD forces the
  // trailing rows to vanish one after another.
  SymMatrix c(n);
  for (int i = 0; i < k; ++i) c.set(i, i, 1.0);
  std::vector<SymMatrix> mats;
  for (int j = k; j + 1 < n; ++j) mats.push_back(-(unit(n, j, j) + unit(n, j + 1, j)));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      const bool tied = j >= k + 1 && i == j - 1;
      if (tied || !coin(rng)) continue;
      mats.push_back(-unit(n, i, j) * 0.5);
    }
  }
  if (k == n) {
    for (int i = 0; i < n; ++i)
      if (coin(rng)) mats.push_back(-unit(n, i, i));
  }
  const int m = static_cast<int>(mats.size());
  const OrthogonalMatrix q = rotation(rng, n);
  Eigen::MatrixXd mix = gaussian(rng, m, m) + 3.0 * Eigen::MatrixXd::Identity(m, m);
  const Eigen::VectorXd shift = gaussian(rng, m, 1).col(0) * 0.3;
  const LinearMapA a0(n, mats);
  const SymMatrix c_shift = c - a0.adjoint(shift);
  const LinearMapA mixed = a0.combine(mix);
  Eigen::VectorXd b = gaussian(rng, m, 1).col(0);
  PlantedFace out;
  const Eigen::MatrixXd qt = q.dense().transpose();
  out.problem = SdpProblem(mixed.congruence(qt), b, congruence(c_shift, qt));
  out.rank = k;
  out.face_basis = q.dense().leftCols(k);
  return out;
}

SdpProblem duality_gap(double g, double v) {
  const int n = 4;
  const SymMatrix a1 = -(unit(n, 0, 1) + unit(n, 2, 2));
  const SymMatrix a2 = -unit(n, 1, 1);
  const SymMatrix a3 = unit(n, 3, 3);
  return make(n, {a1, a2, a3}, {-1, 0, 1}, SymMatrix::diagonal({0, 0, g, v}));
}

SdpProblem unbounded(std::uint32_t seed, int n) {
  std::mt19937 rng(seed);
  const Eigen::VectorXd w = gaussian(rng, n, 1).col(0).normalized();
  const SymMatrix ww(Eigen::MatrixXd(w * w.transpose()));
  return make(n, {-ww}, {1.0}, SymMatrix::identity(n));
}

std::vector<Entry> all() {
  using K = ExtendedReal;
  std::vector<Entry> out;
  const auto add = [&](std::string name, SdpProblem p, FeasStatus s, std::optional<ExtendedReal> v,
                       std::optional<Attainment> att, std::string note) {
    out.push_back({std::move(name), std::move(p), s, v, att, std::move(note)});
  };
  add("worked-example", worked_example(), FeasStatus::StrongFeasible, K::finite(0.0), Attainment::No,
      "3x3 example with an unattained optimal value 0");

  add("weak-infeas-2x2", weak_infeasible_2x2(), FeasStatus::WeakInfeasible, K::neg_inf(),
      Attainment::NotApplicable, "slacks [[y,1],[1,0]]");
  add("weak-infeas-2x2-scaled", weak_infeasible_2x2(3.0), FeasStatus::WeakInfeasible, K::neg_inf(),
      Attainment::NotApplicable, "slacks [[y,3],[3,0]]");
  add("weak-infeas-2x2-rotated", weak_infeasible_2x2(1.0, 0.7), FeasStatus::WeakInfeasible, K::neg_inf(),
      Attainment::NotApplicable, "slacks [[y,1],[1,0]] in rotated coordinates");
  add("weak-infeas-2x2-rotated-scaled", weak_infeasible_2x2(0.25, 2.1), FeasStatus::WeakInfeasible,
      K::neg_inf(), Attainment::NotApplicable, "scaled and rotated copy");
  {
    const int n = 3;
    add("weak-infeas-3x3", make(n, {-unit(n, 0, 0), -(unit(n, 0, 2) + unit(n, 1, 1))}, {0, 0},
                                SymMatrix::from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}})),
        FeasStatus::WeakInfeasible, K::neg_inf(), Attainment::NotApplicable,
        "slacks [[y1,1,y2],[1,y2,1],[y2,1,0]]: optimal-set system of the worked example");
  }

  add("strong-infeas-diag", make(2, {SymMatrix::diagonal({0, 1})}, {1}, SymMatrix::diagonal({-1, 0})),
      FeasStatus::StrongInfeasible, K::neg_inf(), Attainment::NotApplicable, "slacks diag(-1, -y)");
  add("strong-infeas-neg-identity", make(2, {unit(2, 0, 1)}, {1}, SymMatrix::identity(2) * -1.0),
      FeasStatus::StrongInfeasible, K::neg_inf(), Attainment::NotApplicable, "slacks [[-1,-y],[-y,-1]]");
  add("strong-infeas-rotated",
      rotated(make(2, {SymMatrix::diagonal({0, 1})}, {1}, SymMatrix::diagonal({-1, 0})), plane_rotation(1.1)),
      FeasStatus::StrongInfeasible, K::neg_inf(), Attainment::NotApplicable, "rotated copy of strong-infeas-diag");
  {
    const int n = 3;
    add("strong-infeas-3x3",
        make(n, {-unit(n, 0, 0), -unit(n, 1, 2)}, {1, 0}, SymMatrix::from_rows({{0, 0, 0}, {0, -2, 0}, {0, 0, 1}})),
        FeasStatus::StrongInfeasible, K::neg_inf(), Attainment::NotApplicable, "entry (2,2) fixed at -2");
  }

  add("weak-feas-2x2", make(2, {SymMatrix::diagonal({-1, 0})}, {-1}, SymMatrix(2)), FeasStatus::WeakFeasible,
      K::finite(0.0), Attainment::Yes, "slacks diag(y, 0), maximize -y");
  add("duality-gap", duality_gap(1.0, 2.0), FeasStatus::WeakFeasible, K::finite(2.0), Attainment::Yes,
      "dual value 2, primal value 3");
  add("duality-gap-large", duality_gap(5.0, -1.0), FeasStatus::WeakFeasible, K::finite(-1.0), Attainment::Yes,
      "dual value -1, primal value 4");
  add("unbounded-3", unbounded(7, 3), FeasStatus::StrongFeasible, K::pos_inf(), Attainment::NotApplicable,
      "slacks I + y w w^T, maximize y");
  add("strong-feas-identity", make(2, {SymMatrix::identity(2)}, {1}, SymMatrix::identity(2)),
      FeasStatus::StrongFeasible, K::finite(1.0), Attainment::Yes, "slacks (1 - y) I, maximize y");

  for (int n = 2; n <= 5; ++n) {
    for (int k : {0, 1, n - 1, n}) {
      if (k == n - 1 && n - 1 <= 1) continue;
      const std::string name = "planted-face-n" + std::to_string(n) + "-k" + std::to_string(k);
      const PlantedFace pf = planted_face(1000u + 10u * n + k, n, k);
      add(name, pf.problem, k == n ? FeasStatus::StrongFeasible : FeasStatus::WeakFeasible, std::nullopt,
          std::nullopt, "planted minimal face of rank " + std::to_string(k));
    }
  }
  return out;
}

Entry find(const std::string& name) {
  for (auto& e : all()) {
    if (e.name == name) return e;
  }
  fail(ErrorKind::Parse, "unknown catalog instance '" + name + "'");
}

}  // namespace sdpc::catalog
