#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spsiv/core_model.hpp"
#include "spsiv/rng.hpp"

namespace spsiv {

/// Y_t = sum_{i=1..na} a_i Y_{t-i} + sum_{i=1..nb} b_i U_{t-i+1} + N_t,
/// theta = [a_1..a_na, b_1..b_nb].
struct ArxModel {
  ArxModel(int na, int nb, Vector theta);

  int na;
  int nb;
  Vector theta;

  Eigen::Index dim() const { return na + nb; }
  /// Leading samples without a complete regressor: max(na, nb - 1).
  int history() const;
};

enum class NoiseFamily { Gaussian, Laplacian, Uniform };

/// Zero-mean symmetric noise. variance == 0 gives the noiseless system.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::Gaussian;
  double variance = 1.0;

  double sample(Rng& rng) const;
};

/// Raw input/output record (no instruments yet). Index 0 is time t = 1.
struct ArxSeries {
  int na = 0;
  int nb = 0;
  Vector y;
  Vector u;

  Eigen::Index length() const { return y.size(); }
  int history() const;
  /// Regression rows available: length() - history().
  Eigen::Index rows() const;
};

/// U_1 = V_1, U_t = coeff * U_{t-1} + V_t with V_t ~ N(0, innovation_std^2).
Vector generate_ar1_input(Eigen::Index n, double coeff, double innovation_std,
                          std::uint64_t seed);

/// Laplace(0, beta) by inverse CDF with beta = sqrt(variance / 2).
double laplace_sample(Rng& rng, double variance);

/// Simulates the ARX recursion driven by `inputs`. Pre-sample outputs and
/// inputs are zero unless `initial_outputs` = (Y_0, Y_{-1}, ...) is given.
/// Throws SimulationDiverged on a non-finite output.
ArxSeries simulate_arx(const ArxModel& model, const Vector& inputs, const NoiseSpec& noise,
                       std::uint64_t seed,
                       const std::optional<Vector>& initial_outputs = std::nullopt);

/// Regressor rows phi_t = [Y_{t-1..t-na}, U_{t..t-nb+1}] for every t with
/// complete history (the first history() samples are dropped).
Matrix arx_regressors(const ArxSeries& series);

/// Outputs aligned with arx_regressors().
Vector arx_outputs(const ArxSeries& series);

/// Noise-free output trajectory from a parameter guess: the first na
/// samples are copied from the observed outputs, later ones follow
/// Ytilde_t = sum a_i Ytilde_{t-i} + sum b_i U_{t-i+1}. The instruments are
/// the regressors with the autoregressive entries read from Ytilde.
/// Throws SimulationDiverged on a non-finite trajectory.
Matrix reconstructed_instruments(const ArxSeries& series, const Vector& theta_guess);

/// Purely exogenous instruments. The autoregressive slots hold the inputs
/// U_{t-nb}, ..., U_{t-nb-na+1} (for nb = 1 these are U_{t-1..t-na}); the
/// input slots repeat U_{t..t-nb+1}. Pre-sample inputs are zero.
Matrix delayed_input_instruments(const ArxSeries& series);

/// Dataset from a series and instruments aligned with arx_regressors().
Dataset arx_dataset(const ArxSeries& series, Matrix instruments);

}  // namespace spsiv
