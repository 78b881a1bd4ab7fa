#include "spsiv/ellipsoid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spsiv/errors.hpp"

namespace spsiv {

namespace {

// A is treated as positive definite only if lambda_min(A) exceeds this
// fraction of max(1, |A|). A = I - K^T K has unit scale from the identity
// term, so an all-equal sign row (K = I) lands on exact zero up to rounding.
constexpr double kDefiniteTol = 1e-12;
constexpr double kClampTol = 1e-9;
constexpr double kLogStartGap = -20.723265836946411;  // ln(1e-9)
constexpr int kMaxProbes = 400;
constexpr int kMaxGoldenIters = 400;

// Multiplier parameterized by mu: lambda * a_min - 1 = exp(mu). Every
// denominator lambda * a_k - 1 is formed without cancellation.
struct ReducedDual {
  Vector eig;         // ascending eigenvalues of A
  Vector beta_sq;     // squared coordinates of b in the eigenbasis
  double c;

  double lambda(double mu) const { return (1.0 + std::exp(mu)) / eig(0); }

  double objective(double mu) const {
    const double gap = std::exp(mu);
    const double lam = lambda(mu);
    const double a_min = eig(0);
    double quad = 0.0;
    for (Eigen::Index k = 0; k < eig.size(); ++k) {
      if (beta_sq(k) == 0.0) continue;
      const double denom = ((eig(k) - a_min) + gap * eig(k)) / a_min;
      quad += beta_sq(k) / denom;
    }
    return lam * lam * quad - lam * c;
  }
};

Matrix sign_weighted_cross(const Dataset& data, const Perturbation& pert, int i, Vector& rho) {
  const Eigen::Index d = data.d();
  Matrix cross = Matrix::Zero(d, d);
  rho = Vector::Zero(d);
  for (Eigen::Index t = 0; t < data.n(); ++t) {
    const double a = static_cast<double>(pert.signs(i - 1, t));
    rho += (a * data.outputs()(t)) * data.instruments().row(t).transpose();
    cross += a * data.instruments().row(t).transpose() * data.regressors().row(t);
  }
  const double inv_n = 1.0 / static_cast<double>(data.n());
  rho *= inv_n;
  return cross * inv_n;
}

DualProblem assemble(const SpsState& state, const Dataset& data, const Perturbation& pert,
                     const Matrix& v_inv, int i) {
  Vector rho;
  const Matrix q = sign_weighted_cross(data, pert, i, rho);
  const Vector w = rho - q * state.theta_iv;
  const Matrix& h_inv_sqrt = state.Hn_inv_sqrt.matrix();
  const Matrix k = h_inv_sqrt * q * v_inv * state.Hn_sqrt.matrix();
  const Vector u = h_inv_sqrt * w;
  const Eigen::Index d = data.d();
  return DualProblem(SymMatrix(Matrix::Identity(d, d) - k.transpose() * k), k.transpose() * u,
                     -u.squaredNorm());
}

}  // namespace

ExtReal ExtReal::finite(double v) {
  if (!std::isfinite(v)) throw InputError("ExtReal::finite: value must be finite");
  return ExtReal(v, false);
}

double ExtReal::value() const {
  if (unbounded_) throw std::logic_error("ExtReal::value: value is unbounded");
  return value_;
}

bool operator==(const ExtReal& a, const ExtReal& b) {
  if (a.unbounded_ || b.unbounded_) return a.unbounded_ == b.unbounded_;
  return a.value_ == b.value_;
}

std::partial_ordering operator<=>(const ExtReal& a, const ExtReal& b) {
  if (a.unbounded_ && b.unbounded_) return std::partial_ordering::equivalent;
  if (a.unbounded_) return std::partial_ordering::greater;
  if (b.unbounded_) return std::partial_ordering::less;
  return a.value_ <=> b.value_;
}

DualProblem::DualProblem(SymMatrix a, Vector b_in, double c_in)
    : A(std::move(a)), b(std::move(b_in)), c(c_in) {
  if (b.size() != A.dim()) throw InputError("DualProblem: b and A differ in dimension");
  if (!b.allFinite() || !std::isfinite(c) || !A.matrix().allFinite()) {
    throw InputError("DualProblem: non-finite data");
  }
  const double scale = std::max({1.0, A.matrix().norm(), b.squaredNorm()});
  if (c > kClampTol * scale) throw InputError("DualProblem: c must be nonpositive");
  if (c > 0.0) c = 0.0;
}

DualProblem build_dual_problem(const SpsState& state, const Perturbation& pert,
                               const Dataset& data, int i) {
  if (i < 1 || i >= pert.m()) throw InputError("build_dual_problem: index must be in 1..m-1");
  if (pert.n() != data.n()) throw InputError("build_dual_problem: perturbation size mismatch");
  return assemble(state, data, pert, inverse_general(state.Vn), i);
}

double dual_objective(const DualProblem& p, double lambda) {
  const Eigen::Index d = p.A.dim();
  const Matrix shifted = lambda * p.A.matrix() - Matrix::Identity(d, d);
  const SymMatrix pinv = psd_pinv(SymMatrix(shifted), 1e-14);
  return lambda * lambda * p.b.dot(pinv.matrix() * p.b) - lambda * p.c;
}

ExtReal solve_dual(const DualProblem& p, double tol) {
  const EigDecomp e = sym_eig(p.A);
  const double a_min = e.eigenvalues(0);
  const double scale = std::max(1.0, e.eigenvalues.cwiseAbs().maxCoeff());
  if (a_min <= kDefiniteTol * scale) return ExtReal::unbounded();
  if (p.b.isZero(0.0) && p.c == 0.0) return ExtReal::finite(0.0);

  const Vector beta = e.eigenvectors.transpose() * p.b;
  const ReducedDual g{e.eigenvalues, beta.cwiseAbs2(), p.c};

  double best = std::numeric_limits<double>::infinity();
  auto eval = [&](double mu) {
    const double v = g.objective(mu);
    best = std::min(best, v);
    return v;
  };

  // Grow the upper end until g has increased across three consecutive probes.
  std::vector<double> mus{kLogStartGap};
  std::vector<double> vals{eval(kLogStartGap)};
  int rising = 0;
  std::size_t first_rise = 0;
  for (int probe = 1; probe < kMaxProbes && rising < 3; ++probe) {
    const double mu = kLogStartGap + probe;
    const double v = eval(mu);
    if (v > vals.back()) {
      if (rising == 0) first_rise = mus.size();
      ++rising;
    } else {
      rising = 0;
    }
    mus.push_back(mu);
    vals.push_back(v);
  }
  if (rising < 3) throw Error("solve_dual: failed to bracket the dual minimizer");

  double lo = mus[first_rise >= 2 ? first_rise - 2 : 0];
  double hi = mus[first_rise];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double width_tol = std::max(tol * 1e-3, 1e-15);
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = eval(x1);
  double f2 = eval(x2);
  for (int it = 0; it < kMaxGoldenIters && hi - lo > width_tol; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = eval(x2);
    }
  }
  return ExtReal::finite(std::max(best, 0.0));
}

OuterApproximation outer_approximation(const SpsState& state, const Perturbation& pert,
                                       const Dataset& data, int q) {
  const int m = pert.m();
  if (q <= 0 || q >= m) throw InputError("outer_approximation: need 0 < q < m");
  if (pert.n() != data.n()) throw InputError("outer_approximation: perturbation size mismatch");
  const Matrix v_inv = inverse_general(state.Vn);

  std::vector<ExtReal> gammas;
  gammas.reserve(static_cast<std::size_t>(m - 1));
  for (int i = 1; i < m; ++i) {
    gammas.push_back(solve_dual(assemble(state, data, pert, v_inv, i)));
  }

  std::vector<ExtReal> sorted = gammas;
  std::sort(sorted.begin(), sorted.end(), [](const ExtReal& a, const ExtReal& b) { return a > b; });
  const ExtReal radius = sorted[static_cast<std::size_t>(q - 1)];

  const Matrix& h_inv_sqrt = state.Hn_inv_sqrt.matrix();
  const Matrix whitened = h_inv_sqrt * state.Vn;
  SymMatrix shape(whitened.transpose() * whitened);
  return OuterApproximation{Ellipsoid{state.theta_iv, std::move(shape), radius},
                            std::move(gammas)};
}

bool ellipsoid_contains(const Ellipsoid& e, const Vector& theta) {
  if (theta.size() != e.center.size()) throw InputError("ellipsoid_contains: dimension mismatch");
  if (e.radius.is_unbounded()) return true;
  const Vector diff = theta - e.center;
  return diff.dot(e.shape.matrix() * diff) <= e.radius.value();
}

}  // namespace spsiv
