#include "sdpc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sdpc/error.hpp"

namespace sdpc {

namespace {

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    fail(ErrorKind::DimensionMismatch, os.str());
  }
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace

SymMatrix::SymMatrix(int n) : m_(Eigen::MatrixXd::Zero(n, n)) {
  if (n < 0) fail(ErrorKind::OutOfRange, "SymMatrix: negative dimension");
}

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) fail(ErrorKind::DimensionMismatch, "SymMatrix: matrix is not square");
  m_ = symmetrized(m);
}

SymMatrix SymMatrix::identity(int n) {
  return SymMatrix(Eigen::MatrixXd::Identity(n, n));
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  SymMatrix x(static_cast<int>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) x.m_(i, i) = d[i];
  return x;
}

SymMatrix SymMatrix::diagonal(std::initializer_list<double> d) {
  return diagonal(std::span<const double>(d.begin(), d.size()));
}

SymMatrix SymMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd m(n, n);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != n) fail(ErrorKind::DimensionMismatch, "from_rows: ragged rows");
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    fail(ErrorKind::Precondition, "from_rows: rows are not symmetric");
  }
  return SymMatrix(m);
}

void SymMatrix::set(int i, int j, double v) {
  m_(i, j) = v;
  m_(j, i) = v;
}

void SymMatrix::add(int i, int j, double v) {
  m_(i, j) += v;
  if (i != j) m_(j, i) += v;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  require_same_dim(n(), o.n(), "operator+");
  m_ += o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  require_same_dim(n(), o.n(), "operator-");
  m_ -= o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

OrthogonalMatrix::OrthogonalMatrix(Eigen::MatrixXd q) : q_(std::move(q)) {
  if (q_.rows() != q_.cols()) fail(ErrorKind::DimensionMismatch, "OrthogonalMatrix: not square");
  if (q_.rows() == 0) return;
  const Eigen::MatrixXd defect =
      q_.transpose() * q_ - Eigen::MatrixXd::Identity(q_.rows(), q_.cols());
  if (defect.cwiseAbs().maxCoeff() > 1e-12) {
    std::ostringstream os;
    os << "OrthogonalMatrix: columns not orthonormal (defect " << defect.cwiseAbs().maxCoeff() << ")";
    fail(ErrorKind::Precondition, os.str());
  }
}

OrthogonalMatrix OrthogonalMatrix::identity(int n) {
  return OrthogonalMatrix(Eigen::MatrixXd::Identity(n, n));
}

OrthogonalMatrix OrthogonalMatrix::orthonormalized(const Eigen::MatrixXd& q) {
  const int n = static_cast<int>(q.rows());
  if (n == 0) return OrthogonalMatrix(Eigen::MatrixXd(0, 0));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
  Eigen::MatrixXd out = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  // Keep column orientation of the input.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) out.col(j) *= -1.0;
  }
  return OrthogonalMatrix(out);
}

OrthogonalMatrix OrthogonalMatrix::transpose() const {
  return OrthogonalMatrix(Eigen::MatrixXd(q_.transpose()));
}

OrthogonalMatrix OrthogonalMatrix::compose_lower(int offset, const OrthogonalMatrix& inner) const {
  require_same_dim(n() - offset, inner.n(), "compose_lower");
  Eigen::MatrixXd block = Eigen::MatrixXd::Identity(n(), n());
  block.bottomRightCorner(inner.n(), inner.n()) = inner.dense();
  return orthonormalized(q_ * block);
}

double trace_inner(const SymMatrix& a, const SymMatrix& b) {
  require_same_dim(a.n(), b.n(), "trace_inner");
  if (a.n() == 0) return 0.0;
  return a.dense().cwiseProduct(b.dense()).sum();
}

SymMatrix pi_upper(const SymMatrix& x, int r) {
  if (r < 0 || r > x.n()) fail(ErrorKind::OutOfRange, "pi_upper: r out of range");
  return SymMatrix(Eigen::MatrixXd(x.dense().topLeftCorner(r, r)));
}

SymMatrix pi_lower(const SymMatrix& x, int r) {
  if (r < 0 || r > x.n()) fail(ErrorKind::OutOfRange, "pi_lower: r out of range");
  const int k = x.n() - r;
  return SymMatrix(Eigen::MatrixXd(x.dense().bottomRightCorner(k, k)));
}

SymMatrix direct_sum(const SymMatrix& a, const SymMatrix& b) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.n() + b.n(), a.n() + b.n());
  m.topLeftCorner(a.n(), a.n()) = a.dense();
  m.bottomRightCorner(b.n(), b.n()) = b.dense();
  return SymMatrix(m);
}

SymMatrix rotate(const SymMatrix& x, const OrthogonalMatrix& q) {
  require_same_dim(x.n(), q.n(), "rotate");
  return SymMatrix(Eigen::MatrixXd(q.dense().transpose() * x.dense() * q.dense()));
}

SymMatrix congruence(const SymMatrix& x, const Eigen::MatrixXd& v) {
  require_same_dim(x.n(), static_cast<int>(v.rows()), "congruence");
  return SymMatrix(Eigen::MatrixXd(v.transpose() * x.dense() * v));
}

SymMatrix expand(const SymMatrix& a, const Eigen::MatrixXd& v) {
  require_same_dim(a.n(), static_cast<int>(v.cols()), "expand");
  return SymMatrix(Eigen::MatrixXd(v * a.dense() * v.transpose()));
}

EigenDecomposition eig_sym(const SymMatrix& x) {
  const int n = x.n();
  if (n == 0) return {Eigen::VectorXd(0), OrthogonalMatrix::identity(0)};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.dense());
  if (es.info() != Eigen::Success) fail(ErrorKind::IllConditioned, "eig_sym: no convergence");
  // Eigen returns ascending order; flip to descending, stable on ties.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return es.eigenvalues()(a) > es.eigenvalues()(b);
  });
  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, n);
  for (int i = 0; i < n; ++i) {
    values(i) = es.eigenvalues()(order[i]);
    vectors.col(i) = es.eigenvectors().col(order[i]);
  }
  return {values, OrthogonalMatrix::orthonormalized(vectors)};
}

double min_eigenvalue(const SymMatrix& x) {
  if (x.n() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.dense(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_abs_eigenvalue(const SymMatrix& x) {
  if (x.n() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.dense(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

int numeric_rank(const SymMatrix& x, const ToleranceConfig& tol) {
  if (x.n() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.dense(), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& l = es.eigenvalues();
  const double scale = std::max(std::abs(l(0)), std::abs(l(l.size() - 1)));
  const double cut = tol.rank_threshold(scale);
  return static_cast<int>((l.array() > cut).count());
}

double dist_to_psd(const SymMatrix& x) {
  if (x.n() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.dense(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseMin(0.0).norm();
}

SymMatrix project_psd(const SymMatrix& x) {
  if (x.n() == 0) return x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.dense());
  const Eigen::VectorXd l = es.eigenvalues().cwiseMax(0.0);
  return SymMatrix(Eigen::MatrixXd(es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose()));
}

OrthogonalMatrix kernel_completion(const SymMatrix& x, int r, const ToleranceConfig& tol) {
  const int n = x.n();
  if (r < 0 || r > n) fail(ErrorKind::OutOfRange, "kernel_completion: rank out of range");
  const int found = numeric_rank(x, tol);
  if (found != r) {
    std::ostringstream os;
    os << "kernel_completion: requested rank " << r << " but numeric rank is " << found;
    fail(ErrorKind::Precondition, os.str());
  }
  if (r == 0 || r == n) return OrthogonalMatrix::identity(n);
  const EigenDecomposition ed = eig_sym(x);
  const Eigen::MatrixXd range = ed.vectors.leading(r);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(range);
  Eigen::MatrixXd u = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return OrthogonalMatrix::orthonormalized(u);
}

int svec_dim(int n) { return n * (n + 1) / 2; }

Eigen::VectorXd svec(const SymMatrix& x) {
  const int n = x.n();
  Eigen::VectorXd v(svec_dim(n));
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      v(k++) = (i == j) ? x(i, j) : std::sqrt(2.0) * x(i, j);
    }
  }
  return v;
}

SymMatrix smat(const Eigen::VectorXd& v, int n) {
  if (v.size() != svec_dim(n)) fail(ErrorKind::DimensionMismatch, "smat: length does not match n");
  SymMatrix x(n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      x.set(i, j, (i == j) ? v(k) : v(k) / std::sqrt(2.0));
      ++k;
    }
  }
  return x;
}

LeastSquares least_squares(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs, double tol) {
  if (m.rows() != rhs.size()) fail(ErrorKind::DimensionMismatch, "least_squares: rhs length");
  LeastSquares out;
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  out.x = Eigen::VectorXd::Zero(cols);
  if (rows == 0 || cols == 0) {
    out.residual = rhs.norm();
    out.null_basis = Eigen::MatrixXd::Identity(cols, cols);
    out.range_basis = Eigen::MatrixXd(rows, 0);
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cut = tol * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  int k = 0;
  while (k < s.size() && s(k) > cut) ++k;
  out.rank = k;
  const Eigen::MatrixXd& u = svd.matrixU();
  const Eigen::MatrixXd& v = svd.matrixV();
  if (k > 0) {
    const Eigen::VectorXd coeff = (u.leftCols(k).transpose() * rhs).cwiseQuotient(s.head(k));
    out.x = v.leftCols(k) * coeff;
  }
  out.residual = (m * out.x - rhs).norm();
  out.null_basis = v.rightCols(cols - k);
  out.range_basis = u.leftCols(k);
  return out;
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& columns, double tol) {
  if (columns.cols() == 0 || columns.rows() == 0) return Eigen::MatrixXd(columns.rows(), 0);
  return least_squares(columns, Eigen::VectorXd::Zero(columns.rows()), tol).range_basis;
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::OutOfRange: return "out of range";
    case ErrorKind::Precondition: return "precondition violated";
    case ErrorKind::MaxIterations: return "iteration limit reached";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::FaceEmpty: return "face empty";
    case ErrorKind::ContractViolation: return "contract violation";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "i/o error";
  }
  return "unknown";
}

}  // namespace sdpc
