#pragma once

#include <cstdint>
#include <vector>

#include "spsiv/linalg.hpp"

namespace spsiv {

/// Aligned sample of outputs Y_t, regressors phi_t (rows) and instruments
/// psi_t (rows). Validated on construction: equal lengths, matching widths,
/// finite entries.
class Dataset {
 public:
  Dataset(Vector outputs, Matrix regressors, Matrix instruments);

  Eigen::Index n() const { return outputs_.size(); }
  Eigen::Index d() const { return regressors_.cols(); }

  const Vector& outputs() const { return outputs_; }
  const Matrix& regressors() const { return regressors_; }
  const Matrix& instruments() const { return instruments_; }

  /// Subset of rows, in the given order.
  Dataset select(const std::vector<Eigen::Index>& rows) const;

 private:
  Vector outputs_;
  Matrix regressors_;
  Matrix instruments_;
};

/// Randomization settings. The confidence level is kept as the exact
/// rational p = 1 - q/m.
class SpsConfig {
 public:
  SpsConfig(int m, int q, std::uint64_t seed);

  int m() const { return m_; }
  int q() const { return q_; }
  std::uint64_t seed() const { return seed_; }

  /// 1 - q/m as a double, for reporting only.
  double confidence() const { return 1.0 - static_cast<double>(q_) / m_; }

 private:
  int m_;
  int q_;
  std::uint64_t seed_;
};

/// Random signs alpha_{i,t} for i = 1..m-1 (row i-1 of `signs`) and a
/// permutation pi of {0..m-1} used to break ties between the sums.
/// alpha_{0,t} = 1 is implicit.
struct Perturbation {
  Eigen::Matrix<signed char, Eigen::Dynamic, Eigen::Dynamic> signs;
  std::vector<int> permutation;

  int m() const { return static_cast<int>(permutation.size()); }
  Eigen::Index n() const { return signs.cols(); }
};

/// Quantities that depend on the data only.
struct SpsState {
  SymMatrix Hn;           // (1/n) sum psi psi^T
  SymMatrix Hn_sqrt;      // principal square root
  SymMatrix Hn_inv_sqrt;  // its inverse
  Matrix Vn;              // (1/n) sum psi phi^T
  Vector theta_iv;        // instrumental variables estimate
};

/// Builds H_n, its square roots, V_n and the IV estimate. Throws
/// SingularDesign when H_n or V_n fails the 1e-12 relative conditioning gate.
SpsState build_state(const Dataset& data);

/// Draws the signs (row-major, one engine bit each) and then the permutation
/// (Fisher-Yates) from a single Rng seeded with config.seed().
Perturbation draw_perturbation(const SpsConfig& config, Eigen::Index n);

/// (1/n) sum psi_t phi_t^T.
Matrix cross_moment(const Dataset& data);

/// (1/n) sum psi_t psi_t^T.
SymMatrix instrument_moment(const Dataset& data);

}  // namespace spsiv
