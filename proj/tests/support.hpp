#pragma once

// Hand-rolled generators shared by the property tests. They draw from the
// library's own seeded Rng so every failure is reproducible from its seed.

#include <cmath>

#include "spsiv/core_model.hpp"
#include "spsiv/rng.hpp"

namespace spsiv::testing {

inline Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
  }
  return m;
}

inline Vector gaussian_vector(Rng& rng, Eigen::Index n) {
  return gaussian_matrix(rng, n, 1).col(0);
}

inline SymMatrix random_symmetric(Rng& rng, Eigen::Index d) {
  const Matrix g = gaussian_matrix(rng, d, d);
  return SymMatrix(g + g.transpose());
}

// Eigenvalues spread log-uniformly over [1, cond].
inline SymMatrix random_spd(Rng& rng, Eigen::Index d, double cond = 100.0) {
  const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rng, d, d));
  const Matrix q = qr.householderQ();
  Vector eig(d);
  for (Eigen::Index k = 0; k < d; ++k) eig(k) = std::pow(cond, rng.uniform());
  return SymMatrix(q * eig.asDiagonal() * q.transpose());
}

inline SymMatrix random_psd_rank(Rng& rng, Eigen::Index d, Eigen::Index rank) {
  const Matrix g = gaussian_matrix(rng, d, rank);
  return SymMatrix(g * g.transpose());
}

// Instruments correlated with the regressors, symmetric noise on the outputs.
struct RandomProblem {
  Dataset data;
  Vector theta_true;
};

inline RandomProblem random_problem(Rng& rng, Eigen::Index n, Eigen::Index d,
                                    double noise_std = 1.0) {
  const Matrix psi = gaussian_matrix(rng, n, d);
  const Matrix mix = Matrix::Identity(d, d) + 0.3 * gaussian_matrix(rng, d, d);
  const Matrix phi = psi * mix + 0.5 * gaussian_matrix(rng, n, d);
  const Vector theta = gaussian_vector(rng, d);
  const Vector y = phi * theta + noise_std * gaussian_vector(rng, n);
  return RandomProblem{Dataset(y, phi, psi), theta};
}

}  // namespace spsiv::testing
