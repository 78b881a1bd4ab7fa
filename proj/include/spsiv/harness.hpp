#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spsiv/ellipsoid.hpp"
#include "spsiv/simulation.hpp"
#include "spsiv/sps.hpp"

namespace spsiv {

enum class InstrumentMode {
  DelayedInput,      // exogenous inputs only; the exact-confidence setting
  IndependentSplit,  // reconstruction from an LS fit on samples not used by SPS
  SameData,          // reconstruction from an LS fit on the SPS sample itself
};

const char* to_string(InstrumentMode mode);
InstrumentMode instrument_mode_from_string(const std::string& name);

/// Data-generating setup for Monte Carlo experiments.
///
/// The simulated series is laid out in regression rows as
///   [burn_in | split | block], block = pool > 0 ? pool : n.
/// The SPS sample is the block itself, or n rows drawn without replacement
/// from it when pool > 0. Split rows feed the LS guess in IndependentSplit
/// mode and are otherwise unused.
struct Scenario {
  std::string name;
  ArxModel model;
  double input_coeff = 0.75;
  double input_std = 1.0;
  NoiseSpec noise;
  InstrumentMode instruments = InstrumentMode::DelayedInput;
  Eigen::Index n = 25;
  Eigen::Index split = 0;
  Eigen::Index pool = 0;
  Eigen::Index burn_in = 0;
};

/// First-order system a* = 0.7, b* = 1 with AR(1) input (0.75) and
/// unit-variance Laplacian noise.
Scenario arx11_scenario(Eigen::Index n, InstrumentMode mode);

/// Stable ARX(5,4) stand-in for a measured plant: LS guess from a 100-sample
/// split, SPS subsets of size n drawn from a pool of 2000 rows.
Scenario arx54_scenario(Eigen::Index n);

/// Builds the SPS dataset from a series: `sps_rows` select the sample (in
/// regression-row indices), `split_rows` feed the LS guess in
/// IndependentSplit mode. SameData fits the guess on `sps_rows`.
Dataset assemble_dataset(const ArxSeries& series, InstrumentMode mode,
                         const std::vector<Eigen::Index>& sps_rows,
                         const std::vector<Eigen::Index>& split_rows);

struct Trial {
  ArxSeries series;
  Dataset data;
  Vector theta_true;
};

/// Seeds: inputs derive(seed, 1), noise derive(seed, 2), subset derive(seed, 3).
/// Simulations with the same seed and longer n extend shorter ones.
Trial generate_trial(const Scenario& scenario, std::uint64_t seed);

/// Perturbation seed paired with a data seed: derive(data_seed, 4).
std::uint64_t perturbation_seed(std::uint64_t data_seed);

struct TrialOutcome {
  bool indicator_hit = false;
  bool ellipsoid_hit = false;
  int rank = 0;  // rank of ||S_0(theta*)||^2
};

/// Trial k uses data seed config.seed() + k and perturbation seed
/// derive(config.seed() + k, 4).
TrialOutcome run_trial(const Scenario& scenario, const SpsConfig& config, std::uint64_t trial,
                       bool with_ellipsoid);

struct CoverageReport {
  std::size_t trials = 0;    // successful trials
  std::size_t hits = 0;
  std::size_t failures = 0;  // trials whose data violated a precondition
  double empirical = 0.0;
  double target = 0.0;
  double binomial_3sigma = 0.0;

  bool within_3sigma() const;
};

CoverageReport coverage_experiment(const Scenario& scenario, const SpsConfig& config,
                                   std::size_t trials, bool use_ellipsoid);

struct OrderingReport {
  std::vector<std::size_t> histogram;  // histogram[r-1] = count of rank r
  std::size_t trials = 0;
  std::size_t failures = 0;
  double chi_square = 0.0;
  double p_value = 0.0;
  bool passed = false;  // p_value >= 0.01
};

/// Histogram of the rank of ||S_0(theta*)||^2 and a chi-square test against
/// the uniform distribution on {1..m}.
OrderingReport uniform_ordering_test(const Scenario& scenario, const SpsConfig& config,
                                     std::size_t trials);

/// Upper-tail chi-square probability P(X >= statistic) for `dof` degrees
/// of freedom.
double chi_square_p_value(double statistic, double dof);

struct ConsistencyReport {
  std::vector<Eigen::Index> sizes;
  std::vector<double> region_max_distance;  // NaN without a grid or for an empty region
  std::vector<std::size_t> accepted_cells;
  std::vector<ExtReal> ellipsoid_radius;
};

/// For each sample size (strictly ascending) evaluates the region on nested
/// data from a single seed (config.seed()): maximal distance of accepted grid
/// cells from theta* and the outer-approximation radius r.
ConsistencyReport consistency_sweep(const Scenario& scenario, const SpsConfig& config,
                                    const std::vector<Eigen::Index>& sizes,
                                    const std::optional<GridSpec>& grid);

/// sum_{t>=2} (e_t - e_{t-1})^2 / sum_t e_t^2. Values near 2 indicate
/// uncorrelated residuals. Throws InputError for n < 2 or all-zero residuals.
double durbin_watson(const Vector& residuals);

}  // namespace spsiv
