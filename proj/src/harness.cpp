#include "spsiv/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "spsiv/errors.hpp"
#include "spsiv/estimators.hpp"

namespace spsiv {

namespace {

constexpr std::uint64_t kInputStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kSubsetStream = 3;
constexpr std::uint64_t kPerturbationStream = 4;

std::vector<Eigen::Index> iota_rows(Eigen::Index first, Eigen::Index count) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(count));
  std::iota(rows.begin(), rows.end(), first);
  return rows;
}

// Partial Fisher-Yates: `count` distinct rows from [first, first + size).
std::vector<Eigen::Index> sample_rows(Eigen::Index first, Eigen::Index size, Eigen::Index count,
                                      std::uint64_t seed) {
  std::vector<Eigen::Index> pool = iota_rows(first, size);
  Rng rng(seed);
  for (Eigen::Index k = 0; k < count; ++k) {
    const auto j = static_cast<std::size_t>(k) +
                   static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(size - k)));
    std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

Vector rows_outputs(const Vector& y, const std::vector<Eigen::Index>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Eigen::Index>(k)) = y(rows[k]);
  return out;
}

Matrix rows_matrix(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
  return out;
}

SpsConfig trial_config(const SpsConfig& config, std::uint64_t data_seed) {
  return SpsConfig(config.m(), config.q(), perturbation_seed(data_seed));
}

}  // namespace

std::uint64_t perturbation_seed(std::uint64_t data_seed) {
  return Rng::derive(data_seed, kPerturbationStream);
}

const char* to_string(InstrumentMode mode) {
  switch (mode) {
    case InstrumentMode::DelayedInput:
      return "delayed";
    case InstrumentMode::IndependentSplit:
      return "split";
    case InstrumentMode::SameData:
      return "same";
  }
  return "unknown";
}

InstrumentMode instrument_mode_from_string(const std::string& name) {
  if (name == "delayed") return InstrumentMode::DelayedInput;
  if (name == "split") return InstrumentMode::IndependentSplit;
  if (name == "same") return InstrumentMode::SameData;
  throw InputError("unknown instrument mode '" + name + "' (expected delayed, split or same)");
}

Scenario arx11_scenario(Eigen::Index n, InstrumentMode mode) {
  const Eigen::Index split = mode == InstrumentMode::IndependentSplit ? 100 : 0;
  return Scenario{"arx11", ArxModel(1, 1, Vector{{0.7, 1.0}}), 0.75, 1.0,
                  NoiseSpec{NoiseFamily::Laplacian, 1.0}, mode, n, split, 0, 0};
}

Scenario arx54_scenario(Eigen::Index n) {
  // AR polynomial roots 0.8, -0.6, 0.5, 0.3, -0.2.
  return Scenario{"arx54",
                  ArxModel(5, 4, Vector{{0.8, 0.37, -0.32, 0.0012, 0.0144, 1.0, 0.5, -0.4, 0.2}}),
                  0.75,
                  1.0,
                  NoiseSpec{NoiseFamily::Laplacian, 1.0},
                  InstrumentMode::IndependentSplit,
                  n,
                  100,
                  2000,
                  200};
}

Dataset assemble_dataset(const ArxSeries& series, InstrumentMode mode,
                         const std::vector<Eigen::Index>& sps_rows,
                         const std::vector<Eigen::Index>& split_rows) {
  const Matrix phi = arx_regressors(series);
  const Vector y = arx_outputs(series);
  Matrix psi;
  switch (mode) {
    case InstrumentMode::DelayedInput:
      psi = delayed_input_instruments(series);
      break;
    case InstrumentMode::IndependentSplit: {
      if (split_rows.empty()) throw InputError("split instruments need split rows");
      const Vector guess = ls_estimate(rows_outputs(y, split_rows), rows_matrix(phi, split_rows));
      psi = reconstructed_instruments(series, guess);
      break;
    }
    case InstrumentMode::SameData: {
      const Vector guess = ls_estimate(rows_outputs(y, sps_rows), rows_matrix(phi, sps_rows));
      psi = reconstructed_instruments(series, guess);
      break;
    }
  }
  return Dataset(rows_outputs(y, sps_rows), rows_matrix(phi, sps_rows),
                 rows_matrix(psi, sps_rows));
}

Trial generate_trial(const Scenario& sc, std::uint64_t seed) {
  if (sc.n < sc.model.dim()) throw InputError("scenario: n must be at least the model dimension");
  if (sc.pool > 0 && sc.pool < sc.n) throw InputError("scenario: pool smaller than n");
  if (sc.instruments == InstrumentMode::IndependentSplit && sc.split < sc.model.dim()) {
    throw InputError("scenario: split mode needs at least d split samples");
  }
  const Eigen::Index block = sc.pool > 0 ? sc.pool : sc.n;
  const Eigen::Index length = sc.model.history() + sc.burn_in + sc.split + block;

  const Vector u = generate_ar1_input(length, sc.input_coeff, sc.input_std,
                                      Rng::derive(seed, kInputStream));
  ArxSeries series = simulate_arx(sc.model, u, sc.noise, Rng::derive(seed, kNoiseStream));
  const Eigen::Index block_start = sc.burn_in + sc.split;
  const std::vector<Eigen::Index> rows =
      sc.pool > 0 ? sample_rows(block_start, sc.pool, sc.n, Rng::derive(seed, kSubsetStream))
                  : iota_rows(block_start, sc.n);
  Dataset data = assemble_dataset(series, sc.instruments, rows, iota_rows(sc.burn_in, sc.split));
  return Trial{std::move(series), std::move(data), sc.model.theta};
}

TrialOutcome run_trial(const Scenario& scenario, const SpsConfig& config, std::uint64_t trial,
                       bool with_ellipsoid) {
  const std::uint64_t data_seed = config.seed() + trial;
  const Trial tr = generate_trial(scenario, data_seed);
  const SpsState state = build_state(tr.data);
  const SpsConfig cfg = trial_config(config, data_seed);
  const Perturbation pert = draw_perturbation(cfg, tr.data.n());

  TrialOutcome out;
  out.rank = rank_s0(sums_at(state, pert, tr.data, tr.theta_true), pert.permutation);
  out.indicator_hit = rank_accepted(out.rank, config.m(), config.q());
  if (with_ellipsoid) {
    const OuterApproximation outer = outer_approximation(state, pert, tr.data, config.q());
    out.ellipsoid_hit = ellipsoid_contains(outer.ellipsoid, tr.theta_true);
  }
  return out;
}

bool CoverageReport::within_3sigma() const {
  return std::abs(empirical - target) <= binomial_3sigma;
}

CoverageReport coverage_experiment(const Scenario& scenario, const SpsConfig& config,
                                   std::size_t trials, bool use_ellipsoid) {
  if (trials < 100) throw InputError("coverage_experiment: need at least 100 trials");
  CoverageReport r;
  r.target = config.confidence();
  for (std::size_t k = 0; k < trials; ++k) {
    try {
      const TrialOutcome o = run_trial(scenario, config, k, use_ellipsoid);
      ++r.trials;
      if (use_ellipsoid ? o.ellipsoid_hit : o.indicator_hit) ++r.hits;
    } catch (const SingularDesign&) {
      ++r.failures;
    } catch (const SimulationDiverged&) {
      ++r.failures;
    }
  }
  if (r.trials > 0) {
    const double nt = static_cast<double>(r.trials);
    r.empirical = static_cast<double>(r.hits) / nt;
    r.binomial_3sigma = 3.0 * std::sqrt(r.target * (1.0 - r.target) / nt);
  }
  return r;
}

double chi_square_p_value(double statistic, double dof) {
  const boost::math::chi_squared_distribution<double> dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

OrderingReport uniform_ordering_test(const Scenario& scenario, const SpsConfig& config,
                                     std::size_t trials) {
  const int m = config.m();
  if (trials < 100 * static_cast<std::size_t>(m)) {
    throw InputError("uniform_ordering_test: need at least 100 m trials");
  }
  OrderingReport r;
  r.histogram.assign(static_cast<std::size_t>(m), 0);
  for (std::size_t k = 0; k < trials; ++k) {
    try {
      const TrialOutcome o = run_trial(scenario, config, k, false);
      ++r.histogram[static_cast<std::size_t>(o.rank - 1)];
      ++r.trials;
    } catch (const SingularDesign&) {
      ++r.failures;
    } catch (const SimulationDiverged&) {
      ++r.failures;
    }
  }
  if (r.trials == 0) return r;
  const double expected = static_cast<double>(r.trials) / m;
  for (std::size_t c : r.histogram) {
    const double diff = static_cast<double>(c) - expected;
    r.chi_square += diff * diff / expected;
  }
  r.p_value = chi_square_p_value(r.chi_square, m - 1);
  r.passed = r.p_value >= 0.01;
  return r;
}

ConsistencyReport consistency_sweep(const Scenario& scenario, const SpsConfig& config,
                                    const std::vector<Eigen::Index>& sizes,
                                    const std::optional<GridSpec>& grid) {
  if (sizes.empty()) throw InputError("consistency_sweep: no sample sizes");
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    if (sizes[k] <= sizes[k - 1]) throw InputError("consistency_sweep: sizes must ascend strictly");
  }
  if (scenario.pool > 0) throw InputError("consistency_sweep: needs a contiguous (pool = 0) scenario");

  ConsistencyReport r;
  r.sizes = sizes;
  const SpsConfig cfg = trial_config(config, config.seed());
  for (Eigen::Index n : sizes) {
    Scenario sc = scenario;
    sc.n = n;
    const Trial tr = generate_trial(sc, config.seed());
    const SpsState state = build_state(tr.data);
    const Perturbation pert = draw_perturbation(cfg, n);

    double max_dist = std::numeric_limits<double>::quiet_NaN();
    std::size_t accepted = 0;
    if (grid) {
      const GridRegion region = trace_region(state, pert, tr.data, cfg, *grid);
      for (std::size_t c = 0; c < region.mask.size(); ++c) {
        if (!region.mask[c]) continue;
        const double dist = (grid->cell_center(c) - tr.theta_true).norm();
        max_dist = accepted == 0 ? dist : std::max(max_dist, dist);
        ++accepted;
      }
    }
    r.region_max_distance.push_back(max_dist);
    r.accepted_cells.push_back(accepted);
    r.ellipsoid_radius.push_back(outer_approximation(state, pert, tr.data, cfg.q()).ellipsoid.radius);
  }
  return r;
}

double durbin_watson(const Vector& residuals) {
  if (residuals.size() < 2) throw InputError("durbin_watson: need at least two residuals");
  const double denom = residuals.squaredNorm();
  if (denom == 0.0) throw InputError("durbin_watson: residuals are all zero");
  const Eigen::Index n = residuals.size();
  const double num = (residuals.tail(n - 1) - residuals.head(n - 1)).squaredNorm();
  return num / denom;
}

}  // namespace spsiv
