#include "spsiv/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "spsiv/errors.hpp"

namespace spsiv {

namespace {

double at_or_zero(const Vector& v, Eigen::Index idx) {
  return idx >= 0 && idx < v.size() ? v(idx) : 0.0;
}

void check_series(const ArxSeries& s) {
  if (s.na < 0 || s.nb < 0 || s.na + s.nb < 1) throw InputError("ArxSeries: invalid orders");
  if (s.y.size() != s.u.size()) throw InputError("ArxSeries: y and u differ in length");
  if (s.rows() < 1) throw InputError("ArxSeries: too few samples for the model orders");
}

}  // namespace

ArxModel::ArxModel(int na_in, int nb_in, Vector theta_in)
    : na(na_in), nb(nb_in), theta(std::move(theta_in)) {
  if (na < 0 || nb < 0 || na + nb < 1) throw InputError("ArxModel: need na, nb >= 0, na + nb >= 1");
  if (theta.size() != na + nb) throw InputError("ArxModel: theta length must be na + nb");
}

int ArxModel::history() const { return std::max(na, nb - 1); }

int ArxSeries::history() const { return std::max(na, nb - 1); }

Eigen::Index ArxSeries::rows() const { return std::max<Eigen::Index>(0, length() - history()); }

double laplace_sample(Rng& rng, double variance) {
  if (variance == 0.0) return 0.0;
  const double beta = std::sqrt(variance / 2.0);
  const double u = rng.uniform_open();
  return u < 0.5 ? beta * std::log(2.0 * u) : -beta * std::log(2.0 * (1.0 - u));
}

double NoiseSpec::sample(Rng& rng) const {
  if (variance < 0.0) throw InputError("NoiseSpec: variance must be nonnegative");
  switch (family) {
    case NoiseFamily::Gaussian:
      return std::sqrt(variance) * rng.gaussian();
    case NoiseFamily::Laplacian:
      return laplace_sample(rng, variance);
    case NoiseFamily::Uniform: {
      const double half_width = std::sqrt(3.0 * variance);
      return half_width * (2.0 * rng.uniform() - 1.0);
    }
  }
  return 0.0;
}

Vector generate_ar1_input(Eigen::Index n, double coeff, double innovation_std,
                          std::uint64_t seed) {
  if (n < 0) throw InputError("generate_ar1_input: negative length");
  Rng rng(seed);
  Vector u(n);
  double prev = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    prev = coeff * prev + innovation_std * rng.gaussian();
    u(t) = prev;
  }
  return u;
}

ArxSeries simulate_arx(const ArxModel& model, const Vector& inputs, const NoiseSpec& noise,
                       std::uint64_t seed, const std::optional<Vector>& initial_outputs) {
  const Eigen::Index n = inputs.size();
  if (n < std::max(model.na, model.nb)) throw InputError("simulate_arx: input sequence too short");
  Rng rng(seed);
  ArxSeries s{model.na, model.nb, Vector(n), inputs};
  auto past_output = [&](Eigen::Index t, int lag) {
    const Eigen::Index idx = t - lag;
    if (idx >= 0) return s.y(idx);
    const Eigen::Index pre = -idx - 1;  // 0 -> Y_0, 1 -> Y_{-1}, ...
    return initial_outputs && pre < initial_outputs->size() ? (*initial_outputs)(pre) : 0.0;
  };
  for (Eigen::Index t = 0; t < n; ++t) {
    double y = 0.0;
    for (int i = 1; i <= model.na; ++i) y += model.theta(i - 1) * past_output(t, i);
    for (int i = 1; i <= model.nb; ++i) {
      y += model.theta(model.na + i - 1) * at_or_zero(inputs, t - i + 1);
    }
    y += noise.sample(rng);
    if (!std::isfinite(y)) throw SimulationDiverged("simulate_arx: output became non-finite");
    s.y(t) = y;
  }
  return s;
}

Matrix arx_regressors(const ArxSeries& series) {
  check_series(series);
  const int h = series.history();
  const Eigen::Index rows = series.rows();
  Matrix phi(rows, series.na + series.nb);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = r + h;
    for (int i = 1; i <= series.na; ++i) phi(r, i - 1) = series.y(t - i);
    for (int i = 1; i <= series.nb; ++i) phi(r, series.na + i - 1) = series.u(t - i + 1);
  }
  return phi;
}

Vector arx_outputs(const ArxSeries& series) {
  check_series(series);
  return series.y.tail(series.rows());
}

Matrix reconstructed_instruments(const ArxSeries& series, const Vector& theta_guess) {
  check_series(series);
  if (theta_guess.size() != series.na + series.nb) {
    throw InputError("reconstructed_instruments: guess length must be na + nb");
  }
  const Eigen::Index len = series.length();
  Vector y_tilde(len);
  for (Eigen::Index t = 0; t < len; ++t) {
    if (t < series.na) {
      y_tilde(t) = series.y(t);
      continue;
    }
    double v = 0.0;
    for (int i = 1; i <= series.na; ++i) v += theta_guess(i - 1) * y_tilde(t - i);
    for (int i = 1; i <= series.nb; ++i) {
      v += theta_guess(series.na + i - 1) * at_or_zero(series.u, t - i + 1);
    }
    if (!std::isfinite(v)) {
      throw SimulationDiverged("reconstructed_instruments: trajectory became non-finite");
    }
    y_tilde(t) = v;
  }
  ArxSeries noise_free{series.na, series.nb, std::move(y_tilde), series.u};
  Matrix psi = arx_regressors(noise_free);
  return psi;
}

Matrix delayed_input_instruments(const ArxSeries& series) {
  check_series(series);
  const int h = series.history();
  const Eigen::Index rows = series.rows();
  Matrix psi(rows, series.na + series.nb);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = r + h;
    for (int i = 1; i <= series.na; ++i) {
      psi(r, i - 1) = at_or_zero(series.u, t - std::max(series.nb, 1) - i + 1);
    }
    for (int i = 1; i <= series.nb; ++i) psi(r, series.na + i - 1) = series.u(t - i + 1);
  }
  return psi;
}

Dataset arx_dataset(const ArxSeries& series, Matrix instruments) {
  return Dataset(arx_outputs(series), arx_regressors(series), std::move(instruments));
}

}  // namespace spsiv
