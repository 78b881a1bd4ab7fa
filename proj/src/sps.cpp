#include "spsiv/sps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spsiv/errors.hpp"

namespace spsiv {

namespace {

void check_perturbation(const Perturbation& pert, const Dataset& data) {
  if (pert.n() != data.n() || pert.signs.rows() + 1 != pert.m()) {
    throw InputError("perturbation does not match the sample size or m");
  }
}

// True when Z_j is strictly above Z_k in the tie-broken order.
bool above(double zj, int pj, double zk, int pk) {
  return zj > zk || (zj == zk && pj > pk);
}

}  // namespace

Vector prediction_errors(const Dataset& data, const Vector& theta) {
  if (theta.size() != data.d()) throw InputError("prediction_errors: dimension mismatch");
  return data.outputs() - data.regressors() * theta;
}

SumsAt sums_at(const SpsState& state, const Perturbation& pert, const Dataset& data,
               const Vector& theta) {
  check_perturbation(pert, data);
  const Vector eps = prediction_errors(data, theta);
  const Matrix& psi = data.instruments();
  const double inv_n = 1.0 / static_cast<double>(data.n());
  const int m = pert.m();

  SumsAt out;
  out.values.resize(static_cast<std::size_t>(m));
  Vector acc(data.d());
  for (int i = 0; i < m; ++i) {
    acc.setZero();
    for (Eigen::Index t = 0; t < data.n(); ++t) {
      const double w = i == 0 ? eps(t) : pert.signs(i - 1, t) * eps(t);
      acc += w * psi.row(t).transpose();
    }
    const Vector s = state.Hn_inv_sqrt.matrix() * (acc * inv_n);
    out.values[static_cast<std::size_t>(i)] = s.squaredNorm();
  }
  return out;
}

int rank_s0(const SumsAt& sums, std::span<const int> pi) {
  if (sums.values.size() != pi.size() || pi.empty()) {
    throw InputError("rank_s0: sums and permutation differ in length");
  }
  const double z0 = sums.values[0];
  int below = 0;
  for (std::size_t i = 1; i < sums.values.size(); ++i) {
    if (above(z0, pi[0], sums.values[i], pi[i])) ++below;
  }
  return below + 1;
}

bool indicator(const SpsState& state, const Perturbation& pert, const Dataset& data,
               const Vector& theta, int q) {
  const SumsAt sums = sums_at(state, pert, data, theta);
  return rank_accepted(rank_s0(sums, pert.permutation), pert.m(), q);
}

SpsEvaluator::SpsEvaluator(const SpsState& state, const Perturbation& pert,
                           const Dataset& data, int q)
    : perm_(pert.permutation), q_(q) {
  check_perturbation(pert, data);
  if (q <= 0 || q >= pert.m()) throw InputError("SpsEvaluator: need 0 < q < m");
  const int m = pert.m();
  const Eigen::Index d = data.d();
  const double inv_n = 1.0 / static_cast<double>(data.n());
  const Matrix& psi = data.instruments();
  const Matrix& phi = data.regressors();
  const Matrix& w = state.Hn_inv_sqrt.matrix();

  offsets_.resize(d, m);
  gains_.reserve(static_cast<std::size_t>(m));
  Vector rho(d);
  Matrix cross(d, d);
  for (int i = 0; i < m; ++i) {
    rho.setZero();
    cross.setZero();
    for (Eigen::Index t = 0; t < data.n(); ++t) {
      const double a = i == 0 ? 1.0 : static_cast<double>(pert.signs(i - 1, t));
      rho += (a * data.outputs()(t)) * psi.row(t).transpose();
      cross += a * psi.row(t).transpose() * phi.row(t);
    }
    offsets_.col(i) = w * (rho * inv_n);
    gains_.push_back(w * (cross * inv_n));
  }
}

double SpsEvaluator::squared_sum(int i, const Vector& theta) const {
  return (offsets_.col(i) - gains_[static_cast<std::size_t>(i)] * theta).squaredNorm();
}

SumsAt SpsEvaluator::sums(const Vector& theta) const {
  if (theta.size() != offsets_.rows()) throw InputError("SpsEvaluator: dimension mismatch");
  SumsAt out;
  out.values.resize(perm_.size());
  for (int i = 0; i < m(); ++i) out.values[static_cast<std::size_t>(i)] = squared_sum(i, theta);
  return out;
}

int SpsEvaluator::rank(const Vector& theta) const {
  return rank_s0(sums(theta), perm_);
}

bool SpsEvaluator::contains(const Vector& theta) const {
  if (theta.size() != offsets_.rows()) throw InputError("SpsEvaluator: dimension mismatch");
  const double z0 = squared_sum(0, theta);
  const int limit = m() - q_;
  int below = 0;
  for (int i = 1; i < m(); ++i) {
    if (above(z0, perm_[0], squared_sum(i, theta), perm_[static_cast<std::size_t>(i)])) {
      if (++below >= limit) return false;
    }
  }
  return true;
}

void GridSpec::validate(Eigen::Index d) const {
  if (lower.size() != d || upper.size() != d || static_cast<Eigen::Index>(resolution.size()) != d) {
    throw InputError("grid: bounds and resolution must match the parameter dimension");
  }
  if (d < 1 || d > 3) throw InputError("grid: tracing supports 1 <= d <= 3");
  for (Eigen::Index k = 0; k < d; ++k) {
    if (!std::isfinite(lower(k)) || !std::isfinite(upper(k))) {
      throw InputError("grid: bounds must be finite");
    }
    if (!(lower(k) < upper(k))) throw InputError("grid: lower bound must be below upper bound");
    if (resolution[static_cast<std::size_t>(k)] < 1) {
      throw InputError("grid: resolution must be positive");
    }
  }
}

std::size_t GridSpec::cell_count() const {
  std::size_t total = 1;
  for (int r : resolution) total *= static_cast<std::size_t>(r);
  return total;
}

Vector GridSpec::cell_center(std::size_t index) const {
  Vector center(lower.size());
  for (Eigen::Index k = 0; k < lower.size(); ++k) {
    const auto r = static_cast<std::size_t>(resolution[static_cast<std::size_t>(k)]);
    const auto pos = index % r;
    index /= r;
    const double width = (upper(k) - lower(k)) / static_cast<double>(r);
    center(k) = lower(k) + (static_cast<double>(pos) + 0.5) * width;
  }
  return center;
}

std::int64_t GridSpec::cell_of(const Vector& point) const {
  std::int64_t index = 0;
  std::int64_t stride = 1;
  for (Eigen::Index k = 0; k < lower.size(); ++k) {
    const int r = resolution[static_cast<std::size_t>(k)];
    const double u = (point(k) - lower(k)) / (upper(k) - lower(k));
    if (!(u >= 0.0 && u <= 1.0)) return -1;
    const auto pos = std::min<std::int64_t>(static_cast<std::int64_t>(u * r), r - 1);
    index += pos * stride;
    stride *= r;
  }
  return index;
}

std::size_t GridRegion::accepted() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

GridRegion trace_region(const SpsState& state, const Perturbation& pert, const Dataset& data,
                        const SpsConfig& config, const GridSpec& grid) {
  grid.validate(data.d());
  if (pert.m() != config.m()) throw InputError("trace_region: perturbation m differs from config");
  const SpsEvaluator eval(state, pert, data, config.q());
  GridRegion out{grid, {}, config.m(), config.q(), config.seed()};
  const std::size_t cells = grid.cell_count();
  out.mask.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    out.mask[c] = eval.contains(grid.cell_center(c)) ? 1 : 0;
  }
  return out;
}

}  // namespace spsiv
