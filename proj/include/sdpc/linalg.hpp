#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <span>
#include <vector>

#include "sdpc/tolerance.hpp"

namespace sdpc {

/// Dense real symmetric matrix. Writes go through set(), which updates both
/// (i,j) and (j,i), so the stored entries are always exactly symmetric.
/// A zero-dimensional value stands for the trivial space S^0.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n);
  /// Symmetrizes as (m + m^T)/2.
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(int n);
  static SymMatrix diagonal(std::span<const double> d);
  static SymMatrix diagonal(std::initializer_list<double> d);
  /// Row-major list of rows; must describe a symmetric matrix.
  static SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  int n() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  void set(int i, int j, double v);
  void add(int i, int j, double v);
  const Eigen::MatrixXd& dense() const { return m_; }

  double frobenius_norm() const { return m_.norm(); }
  double trace() const { return m_.trace(); }

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend SymMatrix operator-(SymMatrix a) { return a *= -1.0; }

 private:
  Eigen::MatrixXd m_;
};

/// Square matrix with orthonormal columns; checked on construction
/// (|q^T q - I| <= 1e-12 entrywise).
class OrthogonalMatrix {
 public:
  OrthogonalMatrix() = default;
  explicit OrthogonalMatrix(Eigen::MatrixXd q);

  static OrthogonalMatrix identity(int n);
  /// Nearest orthogonal matrix via QR; for products that drifted slightly.
  static OrthogonalMatrix orthonormalized(const Eigen::MatrixXd& q);

  int n() const { return static_cast<int>(q_.rows()); }
  const Eigen::MatrixXd& dense() const { return q_; }
  /// First r columns (n x r).
  Eigen::MatrixXd leading(int r) const { return q_.leftCols(r); }
  /// Last n - r columns.
  Eigen::MatrixXd trailing(int r) const { return q_.rightCols(n() - r); }
  OrthogonalMatrix transpose() const;
  /// this * diag(I_offset, inner).
  OrthogonalMatrix compose_lower(int offset, const OrthogonalMatrix& inner) const;

 private:
  Eigen::MatrixXd q_;
};

/// Sum of a_ij * b_ij; zero for two zero-dimensional matrices.
double trace_inner(const SymMatrix& a, const SymMatrix& b);

/// Upper-left r x r principal submatrix.
SymMatrix pi_upper(const SymMatrix& x, int r);
/// Lower-right (n - r) x (n - r) principal submatrix.
SymMatrix pi_lower(const SymMatrix& x, int r);
/// Block diagonal direct sum.
SymMatrix direct_sum(const SymMatrix& a, const SymMatrix& b);

/// q^T x q, re-symmetrized.
SymMatrix rotate(const SymMatrix& x, const OrthogonalMatrix& q);
/// v^T x v for a rectangular v (n x k), giving a k x k matrix.
SymMatrix congruence(const SymMatrix& x, const Eigen::MatrixXd& v);
/// v a v^T for a rectangular v (n x k) and a k x k matrix a.
SymMatrix expand(const SymMatrix& a, const Eigen::MatrixXd& v);

struct EigenDecomposition {
  Eigen::VectorXd values;    // descending
  OrthogonalMatrix vectors;  // column i pairs with values[i]
};

EigenDecomposition eig_sym(const SymMatrix& x);
double min_eigenvalue(const SymMatrix& x);
double max_abs_eigenvalue(const SymMatrix& x);

/// #{lambda_i > tol.abs + tol.rel * max |lambda|}.
int numeric_rank(const SymMatrix& x, const ToleranceConfig& tol);
/// Frobenius norm of the negative part of the spectrum.
double dist_to_psd(const SymMatrix& x);
/// Euclidean projection onto the PSD cone (negative eigenvalues clipped).
SymMatrix project_psd(const SymMatrix& x);

/// Orthogonal u whose first r columns span range(x) and last n - r columns
/// span its numeric kernel. x must be PSD to tolerance and of numeric rank r.
OrthogonalMatrix kernel_completion(const SymMatrix& x, int r, const ToleranceConfig& tol);

/// Orthonormal coordinates on S^n: diagonal entries and sqrt(2) * upper
/// off-diagonal entries, so dot(svec(a), svec(b)) == trace_inner(a, b).
int svec_dim(int n);
Eigen::VectorXd svec(const SymMatrix& x);
SymMatrix smat(const Eigen::VectorXd& v, int n);

/// Least-squares solve of m * x = rhs through an SVD with rank cut
/// sigma > tol * max(1, sigma_max).
struct LeastSquares {
  Eigen::VectorXd x;             // minimum-norm solution
  double residual = 0.0;         // ||m x - rhs||
  Eigen::MatrixXd null_basis;    // orthonormal basis of ker m
  Eigen::MatrixXd range_basis;   // orthonormal basis of range m
  int rank = 0;
};
LeastSquares least_squares(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs, double tol);

/// Orthonormal basis of the column span, using the same rank rule.
Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& columns, double tol);

}  // namespace sdpc
