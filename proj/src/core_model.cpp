#include "spsiv/core_model.hpp"

#include <numeric>
#include <utility>

#include "spsiv/errors.hpp"
#include "spsiv/estimators.hpp"
#include "spsiv/rng.hpp"

namespace spsiv {

namespace {
constexpr double kConditioning = 1e-12;
}

Dataset::Dataset(Vector outputs, Matrix regressors, Matrix instruments)
    : outputs_(std::move(outputs)),
      regressors_(std::move(regressors)),
      instruments_(std::move(instruments)) {
  if (outputs_.size() == 0) throw InputError("Dataset: empty sample");
  if (regressors_.rows() != outputs_.size() || instruments_.rows() != outputs_.size()) {
    throw InputError("Dataset: outputs, regressors and instruments differ in length");
  }
  if (regressors_.cols() < 1 || instruments_.cols() != regressors_.cols()) {
    throw InputError("Dataset: regressor and instrument rows must share dimension d >= 1");
  }
  if (!outputs_.allFinite() || !regressors_.allFinite() || !instruments_.allFinite()) {
    throw InputError("Dataset: non-finite entry");
  }
}

Dataset Dataset::select(const std::vector<Eigen::Index>& rows) const {
  const auto k = static_cast<Eigen::Index>(rows.size());
  Vector y(k);
  Matrix phi(k, d());
  Matrix psi(k, d());
  for (Eigen::Index r = 0; r < k; ++r) {
    const Eigen::Index src = rows[static_cast<std::size_t>(r)];
    if (src < 0 || src >= n()) throw InputError("Dataset::select: row out of range");
    y(r) = outputs_(src);
    phi.row(r) = regressors_.row(src);
    psi.row(r) = instruments_.row(src);
  }
  return Dataset(std::move(y), std::move(phi), std::move(psi));
}

SpsConfig::SpsConfig(int m, int q, std::uint64_t seed) : m_(m), q_(q), seed_(seed) {
  if (m < 2) throw InputError("SpsConfig: m must be greater than 1");
  if (q <= 0 || q >= m) throw InputError("SpsConfig: q must satisfy 0 < q < m");
}

Matrix cross_moment(const Dataset& data) {
  return data.instruments().transpose() * data.regressors() / static_cast<double>(data.n());
}

SymMatrix instrument_moment(const Dataset& data) {
  return SymMatrix(data.instruments().transpose() * data.instruments() /
                   static_cast<double>(data.n()));
}

SpsState build_state(const Dataset& data) {
  if (data.n() < data.d()) throw InputError("build_state: need n >= d");
  SymMatrix h = instrument_moment(data);
  const EigDecomp eig = sym_eig(h);
  const double top = eig.eigenvalues(eig.eigenvalues.size() - 1);
  if (!(top > 0.0) || eig.eigenvalues(0) <= kConditioning * top) {
    throw SingularDesign("build_state: instrument moment H_n is singular");
  }
  Matrix v = cross_moment(data);
  if (condition_ratio(v) <= kConditioning) {
    throw SingularDesign("build_state: cross moment V_n is singular");
  }
  SymMatrix h_sqrt = principal_sqrt(h);
  SymMatrix h_inv_sqrt = inverse_principal_sqrt(h);
  Vector theta = iv_estimate(data);
  return SpsState{std::move(h), std::move(h_sqrt), std::move(h_inv_sqrt), std::move(v),
                  std::move(theta)};
}

Perturbation draw_perturbation(const SpsConfig& config, Eigen::Index n) {
  if (n < 1) throw InputError("draw_perturbation: n must be positive");
  Rng rng(config.seed());
  const int m = config.m();
  Perturbation p;
  p.signs.resize(m - 1, n);
  for (int i = 0; i < m - 1; ++i) {
    for (Eigen::Index t = 0; t < n; ++t) {
      p.signs(i, t) = static_cast<signed char>(rng.sign());
    }
  }
  p.permutation.resize(static_cast<std::size_t>(m));
  std::iota(p.permutation.begin(), p.permutation.end(), 0);
  for (std::size_t k = p.permutation.size() - 1; k > 0; --k) {
    const auto j = static_cast<std::size_t>(rng.below(k + 1));
    std::swap(p.permutation[k], p.permutation[j]);
  }
  return p;
}

}  // namespace spsiv
