#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spsiv/core_model.hpp"

namespace spsiv {

/// Squared norms ||S_0(theta)||^2, ..., ||S_{m-1}(theta)||^2.
struct SumsAt {
  std::vector<double> values;
};

/// eps_t(theta) = Y_t - phi_t^T theta.
Vector prediction_errors(const Dataset& data, const Vector& theta);

/// Direct evaluation: S_i = H_n^{-1/2} (1/n) sum_t alpha_{i,t} psi_t eps_t(theta).
SumsAt sums_at(const SpsState& state, const Perturbation& pert, const Dataset& data,
               const Vector& theta);

/// Rank of values[0] in the ascending order induced by the permutation
/// tie-break: Z_j above Z_k iff Z_j > Z_k, or Z_j == Z_k and pi(j) > pi(k).
/// Returns 1 when values[0] is the smallest.
int rank_s0(const SumsAt& sums, std::span<const int> pi);

/// Acceptance rule on a rank: R <= m - q.
inline bool rank_accepted(int rank, int m, int q) { return rank <= m - q; }

/// Membership test: rank of the reference sum at most m - q.
bool indicator(const SpsState& state, const Perturbation& pert, const Dataset& data,
               const Vector& theta, int q);

/// Precomputed affine form S_i(theta) = H^{-1/2}(rho_i - Q_i theta), which
/// costs O(m d^2) per evaluation instead of O(m n d). Used for grids.
class SpsEvaluator {
 public:
  SpsEvaluator(const SpsState& state, const Perturbation& pert, const Dataset& data, int q);

  SumsAt sums(const Vector& theta) const;
  int rank(const Vector& theta) const;

  /// Same result as indicator(); stops as soon as m - q sums rank below S_0.
  bool contains(const Vector& theta) const;

  int m() const { return static_cast<int>(perm_.size()); }
  int q() const { return q_; }

 private:
  double squared_sum(int i, const Vector& theta) const;

  Matrix offsets_;             // column i: H^{-1/2} rho_i
  std::vector<Matrix> gains_;  // H^{-1/2} Q_i
  std::vector<int> perm_;
  int q_;
};

/// Axis-aligned grid; cells are evaluated at their centers. Linear cell
/// index runs with axis 0 fastest.
struct GridSpec {
  Vector lower;
  Vector upper;
  std::vector<int> resolution;

  void validate(Eigen::Index d) const;
  std::size_t cell_count() const;
  Vector cell_center(std::size_t index) const;
  /// Cell containing `point`, or -1 when it lies outside the grid.
  std::int64_t cell_of(const Vector& point) const;
};

struct GridRegion {
  GridSpec grid;
  std::vector<std::uint8_t> mask;  // 1 = cell center accepted
  int m = 0;
  int q = 0;
  std::uint64_t seed = 0;

  std::size_t accepted() const;
};

/// Evaluates the indicator on every cell center (d <= 3).
GridRegion trace_region(const SpsState& state, const Perturbation& pert, const Dataset& data,
                        const SpsConfig& config, const GridSpec& grid);

}  // namespace spsiv
