#include "spsiv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "spsiv/errors.hpp"

namespace spsiv {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kPsdTol = 1e-10;
constexpr double kSpdTol = 1e-12;

double max_abs(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

Matrix rebuild(const EigDecomp& e, const Vector& diag) {
  return e.eigenvectors * diag.asDiagonal() * e.eigenvectors.transpose();
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InputError("SymMatrix requires a non-empty square matrix");
  }
  m_ = m;
  for (Eigen::Index j = 0; j < m_.rows(); ++j) {
    for (Eigen::Index k = j + 1; k < m_.cols(); ++k) {
      const double avg = 0.5 * (m(j, k) + m(k, j));
      m_(j, k) = avg;
      m_(k, j) = avg;
    }
  }
}

SymMatrix SymMatrix::identity(Eigen::Index dim) {
  return SymMatrix(Matrix::Identity(dim, dim));
}

SymMatrix SymMatrix::diagonal(const Vector& diag) {
  return SymMatrix(Matrix(diag.asDiagonal()));
}

bool all_finite(const Matrix& m) {
  return m.allFinite();
}

EigDecomp sym_eig(const SymMatrix& sym) {
  if (!sym.matrix().allFinite()) {
    throw InputError("sym_eig: matrix has non-finite entries");
  }
  const Eigen::Index d = sym.dim();
  Matrix a = sym.matrix();
  Matrix v = Matrix::Identity(d, d);
  const double fro = a.norm();

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < d; ++p) {
      for (Eigen::Index q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
    }
    if (off == 0.0 || std::sqrt(off) <= 1e-3 * std::numeric_limits<double>::epsilon() * fro) {
      break;
    }
    for (Eigen::Index p = 0; p < d; ++p) {
      for (Eigen::Index q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - s * akq;
          a(k, q) = a(q, k) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < d; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

  EigDecomp out{Vector(d), Matrix(d, d)};
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    out.eigenvectors.col(k) = v.col(src);
  }
  return out;
}

SymMatrix principal_sqrt(const SymMatrix& m) {
  const EigDecomp e = sym_eig(m);
  const double scale = max_abs(e.eigenvalues);
  if (e.eigenvalues(0) < -kPsdTol * scale) {
    throw NotPositiveSemidefinite("principal_sqrt: matrix has a negative eigenvalue");
  }
  const Vector roots = e.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return SymMatrix(rebuild(e, roots));
}

SymMatrix inverse_principal_sqrt(const SymMatrix& m) {
  const EigDecomp e = sym_eig(m);
  const double top = e.eigenvalues(e.eigenvalues.size() - 1);
  if (!(top > 0.0) || e.eigenvalues(0) <= kSpdTol * top) {
    throw IllConditioned("inverse_principal_sqrt: matrix is not safely positive definite");
  }
  const Vector inv_roots = e.eigenvalues.cwiseSqrt().cwiseInverse();
  return SymMatrix(rebuild(e, inv_roots));
}

SymMatrix psd_pinv(const SymMatrix& m, double rank_tol) {
  const EigDecomp e = sym_eig(m);
  const double cutoff = rank_tol * max_abs(e.eigenvalues);
  Vector inv(e.eigenvalues.size());
  for (Eigen::Index k = 0; k < inv.size(); ++k) {
    const double lam = e.eigenvalues(k);
    inv(k) = (lam > cutoff && lam > 0.0) ? 1.0 / lam : 0.0;
  }
  return SymMatrix(rebuild(e, inv));
}

Vector solve_spd(const SymMatrix& m, const Vector& rhs) {
  if (rhs.size() != m.dim()) throw InputError("solve_spd: dimension mismatch");
  const EigDecomp e = sym_eig(m);
  const double top = e.eigenvalues(e.eigenvalues.size() - 1);
  if (!(top > 0.0) || e.eigenvalues(0) <= kSpdTol * top) {
    throw IllConditioned("solve_spd: matrix is not safely positive definite");
  }
  const Eigen::LLT<Matrix> llt(m.matrix());
  if (llt.info() != Eigen::Success) {
    throw IllConditioned("solve_spd: Cholesky factorization failed");
  }
  return llt.solve(rhs);
}

double condition_ratio(const Matrix& m) {
  if (m.rows() != m.cols()) throw InputError("condition_ratio: matrix must be square");
  if (!m.allFinite()) throw InputError("condition_ratio: non-finite entries");
  const Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  const double top = sv(0);
  if (top == 0.0) return 0.0;
  return sv(sv.size() - 1) / top;
}

Vector solve_general(const Matrix& m, const Vector& rhs, double min_ratio) {
  if (rhs.size() != m.rows()) throw InputError("solve_general: dimension mismatch");
  if (condition_ratio(m) <= min_ratio) {
    throw IllConditioned("solve_general: matrix is numerically singular");
  }
  return m.fullPivLu().solve(rhs);
}

Matrix inverse_general(const Matrix& m, double min_ratio) {
  if (condition_ratio(m) <= min_ratio) {
    throw IllConditioned("inverse_general: matrix is numerically singular");
  }
  return m.fullPivLu().inverse();
}

}  // namespace spsiv
