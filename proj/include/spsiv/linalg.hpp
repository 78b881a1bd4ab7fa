#pragma once

// Small dense symmetric linear algebra. Dimensions here are the parameter
// dimension of a regression model (a handful up to ~100), so everything is
// dense and the eigensolver is a cyclic Jacobi iteration.

#include <Eigen/Dense>

namespace spsiv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Square symmetric matrix. The stored entries are symmetrized on
/// construction, so entry (j,k) and (k,j) are bit-identical.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Eigen::Index dim);
  static SymMatrix diagonal(const Vector& diag);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Eigen::Index j, Eigen::Index k) const { return m_(j, k); }

 private:
  Matrix m_;
};

struct EigDecomp {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns, column k pairs with eigenvalue k
};

/// Eigendecomposition by cyclic Jacobi rotations. Throws InputError on
/// non-finite entries.
EigDecomp sym_eig(const SymMatrix& m);

/// Principal (PSD) square root. Eigenvalues in [-1e-10 * max|lambda|, 0] are
/// clamped to zero; anything more negative throws NotPositiveSemidefinite.
SymMatrix principal_sqrt(const SymMatrix& m);

/// Inverse of the principal square root of a positive definite matrix.
/// Throws IllConditioned when min eig <= 1e-12 * max eig.
SymMatrix inverse_principal_sqrt(const SymMatrix& m);

/// Moore-Penrose pseudo-inverse of a PSD matrix; eigenvalues at or below
/// rank_tol * max|lambda| are treated as zero.
SymMatrix psd_pinv(const SymMatrix& m, double rank_tol);

/// Solves M x = rhs for symmetric positive definite M.
/// Throws IllConditioned when min eig <= 1e-12 * max eig.
Vector solve_spd(const SymMatrix& m, const Vector& rhs);

/// Ratio of the smallest to the largest singular value (0 for the zero
/// matrix). Works for any square matrix.
double condition_ratio(const Matrix& m);

/// Solves M x = rhs for a general square M after a conditioning check
/// against `min_ratio` (see condition_ratio). Throws IllConditioned.
Vector solve_general(const Matrix& m, const Vector& rhs, double min_ratio = 1e-12);

/// Inverse of a general square matrix with the same conditioning check.
Matrix inverse_general(const Matrix& m, double min_ratio = 1e-12);

bool all_finite(const Matrix& m);

}  // namespace spsiv
