#pragma once

#include <compare>
#include <vector>

#include "spsiv/core_model.hpp"

namespace spsiv {

/// A nonnegative value that may be unbounded. Unboundedness is an explicit
/// flag, never a floating-point infinity, and orders above every finite value.
class ExtReal {
 public:
  static ExtReal finite(double v);
  static ExtReal unbounded() { return ExtReal(0.0, true); }

  bool is_unbounded() const { return unbounded_; }
  /// Throws std::logic_error when unbounded.
  double value() const;

  friend bool operator==(const ExtReal& a, const ExtReal& b);
  friend std::partial_ordering operator<=>(const ExtReal& a, const ExtReal& b);

 private:
  ExtReal(double v, bool unbounded) : value_(v), unbounded_(unbounded) {}
  double value_;
  bool unbounded_;
};

/// maximize ||z||^2 subject to z^T A z + 2 z^T b + c <= 0.
struct DualProblem {
  DualProblem(SymMatrix a, Vector b, double c);

  SymMatrix A;
  Vector b;
  double c;  // <= 0; tiny positive rounding is clamped on construction
};

/// {theta : (theta - center)^T shape (theta - center) <= radius}.
struct Ellipsoid {
  Vector center;
  SymMatrix shape;
  ExtReal radius;

  bool unbounded() const { return radius.is_unbounded(); }
};

struct OuterApproximation {
  Ellipsoid ellipsoid;
  std::vector<ExtReal> gammas;  // gamma_i* for i = 1..m-1, in index order
};

/// Builds (A_i, b_i, c_i) for sign row i in 1..m-1, in the whitened
/// coordinates z = H^{-1/2} V (theta - theta_iv).
DualProblem build_dual_problem(const SpsState& state, const Perturbation& pert,
                               const Dataset& data, int i);

/// g(lambda) = lambda^2 b^T (lambda A - I)^+ b - lambda c, the smallest
/// feasible gamma of the semidefinite dual for a fixed multiplier.
double dual_objective(const DualProblem& p, double lambda);

/// Optimal value of the dual semidefinite program
///   min gamma  s.t. lambda >= 0, [[-I + lambda A, lambda b], [lambda b^T, lambda c + gamma]] >= 0,
/// reduced through the Schur complement to a one-dimensional convex
/// minimization of dual_objective over lambda > 1 / lambda_min(A).
/// Unbounded when A is not positive definite. The returned value is a
/// dual-feasible objective, hence never below the true optimum.
ExtReal solve_dual(const DualProblem& p, double tol = 1e-9);

/// Outer approximation centered at the IV estimate; r is the q-th largest gamma_i*.
OuterApproximation outer_approximation(const SpsState& state, const Perturbation& pert,
                                       const Dataset& data, int q);

bool ellipsoid_contains(const Ellipsoid& e, const Vector& theta);

}  // namespace spsiv
