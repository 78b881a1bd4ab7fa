#include "spsiv/cli.hpp"

#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "spsiv/estimators.hpp"
#include "spsiv/io.hpp"

namespace spsiv::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::uint64_t seed = 0;
  int m = 100;
  int q = 5;
  std::string out = ".";
  std::string scenario = "arx11";
  long n = 25;
  std::string instruments = "delayed";
  std::string data;
  CsvSchema schema;
  long split = 0;
  std::string theta;
  std::string lower;
  std::string upper;
  std::string resolution;
  bool mask_csv = false;
  std::size_t trials = 1000;
  bool use_ellipsoid = false;
  std::string sizes = "25,100,400";
  std::string manifest;
};

// Errors detected before any computation; reported as usage errors.
class UsageError : public InputError {
 public:
  using InputError::InputError;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("--") + what + ": cannot parse '" + item + "'");
    }
  }
  if (values.empty()) throw UsageError(std::string("--") + what + ": empty list");
  return values;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

InstrumentMode mode_from(const Options& o) {
  try {
    return instrument_mode_from_string(o.instruments);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
}

Scenario scenario_from(const Options& o) {
  if (o.n < 1) throw UsageError("--n must be positive");
  if (o.scenario == "arx11") return arx11_scenario(o.n, mode_from(o));
  if (o.scenario == "arx54") {
    Scenario s = arx54_scenario(o.n);
    s.instruments = mode_from(o);
    return s;
  }
  throw UsageError("--scenario must be arx11 or arx54");
}

// Data used by indicator/region/ellipsoid: either a simulated scenario
// (theta* known) or a CSV record.
struct Problem {
  Dataset data;
  std::optional<Vector> theta_true;
  InstrumentMode mode;
};

Problem load_problem(const Options& o) {
  const InstrumentMode mode = mode_from(o);
  if (o.data.empty()) {
    Trial tr = generate_trial(scenario_from(o), o.seed);
    return Problem{std::move(tr.data), std::move(tr.theta_true), mode};
  }
  const ArxSeries series = load_csv(o.data, o.schema);
  const Eigen::Index rows = series.rows();
  if (o.split < 0 || o.split >= rows) throw InputError("--split leaves no rows for SPS");
  std::vector<Eigen::Index> split_rows(static_cast<std::size_t>(o.split));
  std::vector<Eigen::Index> sps_rows(static_cast<std::size_t>(rows - o.split));
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (r < o.split) {
      split_rows[static_cast<std::size_t>(r)] = r;
    } else {
      sps_rows[static_cast<std::size_t>(r - o.split)] = r;
    }
  }
  return Problem{assemble_dataset(series, mode, sps_rows, split_rows), std::nullopt, mode};
}

Eigen::Index problem_dim(const Options& o) {
  if (!o.data.empty()) return o.schema.na + o.schema.nb;
  return scenario_from(o).model.dim();
}

GridSpec grid_from(const Options& o, Eigen::Index d) {
  GridSpec g;
  g.lower = to_vector(parse_list(o.lower, "lower"));
  g.upper = to_vector(parse_list(o.upper, "upper"));
  for (double r : parse_list(o.resolution, "resolution")) {
    if (r != static_cast<int>(r)) throw UsageError("--resolution must be integers");
    g.resolution.push_back(static_cast<int>(r));
  }
  try {
    g.validate(d);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  return g;
}

SpsConfig config_from(const Options& o) {
  try {
    return SpsConfig(o.m, o.q, o.seed);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
}

std::string vector_text(const Vector& v) {
  std::ostringstream s;
  s.precision(6);
  for (Eigen::Index k = 0; k < v.size(); ++k) s << (k ? "," : "") << v(k);
  return s.str();
}

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::string> artifacts;
  json extra = json::object();
};

void write_manifest(const Options& o, const Manifest& man) {
  json j{{"format_version", kFormatVersion},
         {"kind", "sps_run_manifest"},
         {"command", man.command},
         {"argv", man.argv},
         {"seed", o.seed},
         {"m", o.m},
         {"q", o.q},
         {"instrument_mode", o.instruments},
         {"code_version", kCodeVersion},
         {"artifacts", man.artifacts}};
  for (auto& [k, v] : man.extra.items()) j[k] = v;
  write_json(fs::path(o.out) / "manifest.json", j);
}

std::vector<std::string> with_out_dir(std::vector<std::string> argv, const std::string& out) {
  std::vector<std::string> result;
  for (std::size_t k = 0; k < argv.size(); ++k) {
    if (argv[k] == "--out") {
      ++k;
      continue;
    }
    if (argv[k].rfind("--out=", 0) == 0) continue;
    result.push_back(argv[k]);
  }
  result.push_back("--out");
  result.push_back(out);
  return result;
}

int execute(const std::string& cmd, const Options& o, const std::vector<std::string>& args,
            std::ostream& out) {
  const SpsConfig config = config_from(o);
  const fs::path dir(o.out);
  Manifest man{cmd, args, {}, json::object()};

  // Validate everything that does not need data before touching the filesystem.
  std::optional<GridSpec> grid;
  std::optional<Vector> theta;
  std::vector<Eigen::Index> sizes;
  if (cmd == "region") grid = grid_from(o, problem_dim(o));
  if (cmd == "consistency" && !o.lower.empty()) grid = grid_from(o, problem_dim(o));
  if (cmd == "indicator") {
    theta = to_vector(parse_list(o.theta, "theta"));
    if (theta->size() != problem_dim(o)) throw UsageError("--theta has the wrong dimension");
  }
  if (cmd == "consistency") {
    for (double s : parse_list(o.sizes, "sizes")) sizes.push_back(static_cast<Eigen::Index>(s));
  }
  if (cmd == "coverage" || cmd == "ordering-test" || cmd == "consistency" || cmd == "simulate") {
    if (!o.data.empty()) throw UsageError(cmd + " runs on simulated scenarios only; drop --data");
    (void)scenario_from(o);
  } else {
    (void)mode_from(o);
  }
  if (!o.data.empty() && mode_from(o) == InstrumentMode::IndependentSplit &&
      o.split < problem_dim(o)) {
    throw UsageError("--instruments split needs --split of at least na + nb rows");
  }
  if (cmd == "coverage" && o.trials < 100) throw UsageError("--trials must be at least 100");
  if (cmd == "ordering-test" && o.trials < 100 * static_cast<std::size_t>(o.m)) {
    throw UsageError("--trials must be at least 100 m");
  }

  fs::create_directories(dir);

  if (cmd == "simulate") {
    const Trial tr = generate_trial(scenario_from(o), o.seed);
    write_series_csv(dir / "series.csv", tr.series);
    const Vector ls = ls_estimate(arx_outputs(tr.series), arx_regressors(tr.series));
    const Vector resid = arx_outputs(tr.series) - arx_regressors(tr.series) * ls;
    const double dw = durbin_watson(resid);
    man.artifacts = {"series.csv"};
    man.extra = {{"n", tr.series.length()}, {"durbin_watson", dw}};
    write_manifest(o, man);
    out << "simulate: " << tr.series.length() << " samples -> " << (dir / "series.csv").string()
        << "; LS estimate [" << vector_text(ls) << "], Durbin-Watson " << dw << '\n';
    return 0;
  }

  if (cmd == "indicator" || cmd == "region" || cmd == "ellipsoid") {
    const Problem prob = load_problem(o);
    const SpsState state = build_state(prob.data);
    const SpsConfig pcfg(o.m, o.q, perturbation_seed(o.seed));
    const Perturbation pert = draw_perturbation(pcfg, prob.data.n());
    man.extra = {{"n", prob.data.n()}, {"perturbation_seed", pcfg.seed()}};
    if (!o.data.empty()) man.extra["data"] = o.data;

    if (cmd == "indicator") {
      const int rank = rank_s0(sums_at(state, pert, prob.data, *theta), pert.permutation);
      const bool inside = rank_accepted(rank, o.m, o.q);
      write_json(dir / "indicator.json", json{{"format_version", kFormatVersion},
                                              {"kind", "sps_indicator"},
                                              {"theta", std::vector<double>(theta->data(), theta->data() + theta->size())},
                                              {"rank", rank},
                                              {"inside", inside},
                                              {"m", o.m},
                                              {"q", o.q}});
      man.artifacts = {"indicator.json"};
      write_manifest(o, man);
      out << "indicator: theta [" << vector_text(*theta) << "] rank " << rank << " of " << o.m
          << " -> " << (inside ? 1 : 0) << '\n';
      return 0;
    }
    if (cmd == "region") {
      GridRegion region = trace_region(state, pert, prob.data, pcfg, *grid);
      region.seed = o.seed;
      write_json(dir / "region.json", region_to_json(region));
      man.artifacts = {"region.json"};
      if (o.mask_csv) {
        write_region_csv(dir / "region.csv", region);
        man.artifacts.push_back("region.csv");
      }
      write_manifest(o, man);
      const std::int64_t center_cell = grid->cell_of(state.theta_iv);
      out << "region: " << region.accepted() << " of " << region.mask.size()
          << " cells accepted; IV estimate cell "
          << (center_cell < 0 ? "off-grid" : (region.mask[static_cast<std::size_t>(center_cell)] ? "inside" : "outside"));
      if (prob.theta_true) {
        const std::int64_t true_cell = grid->cell_of(*prob.theta_true);
        out << "; true parameter cell "
            << (true_cell < 0 ? "off-grid" : (region.mask[static_cast<std::size_t>(true_cell)] ? "inside" : "outside"));
      }
      out << '\n';
      return 0;
    }
    const OuterApproximation outer = outer_approximation(state, pert, prob.data, o.q);
    write_json(dir / "ellipsoid.json", outer_to_json(outer, SpsConfig(o.m, o.q, o.seed)));
    man.artifacts = {"ellipsoid.json"};
    write_manifest(o, man);
    out << "ellipsoid: center [" << vector_text(outer.ellipsoid.center) << "] radius ";
    if (outer.ellipsoid.unbounded()) {
      out << "inf (unbounded)";
    } else {
      out << outer.ellipsoid.radius.value();
    }
    out << '\n';
    return 0;
  }

  const Scenario scenario = scenario_from(o);
  if (cmd == "coverage") {
    const CoverageReport r = coverage_experiment(scenario, config, o.trials, o.use_ellipsoid);
    write_coverage_csv(dir / "coverage.csv", r);
    man.artifacts = {"coverage.csv"};
    man.extra = {{"n", scenario.n}, {"scenario", o.scenario}, {"trials", o.trials}};
    write_manifest(o, man);
    out << "coverage: " << r.hits << '/' << r.trials << " = " << r.empirical << " (target "
        << r.target << " +/- " << r.binomial_3sigma << ", failures " << r.failures << ")\n";
    return 0;
  }
  if (cmd == "ordering-test") {
    const OrderingReport r = uniform_ordering_test(scenario, config, o.trials);
    write_json(dir / "ordering.json", ordering_to_json(r));
    man.artifacts = {"ordering.json"};
    man.extra = {{"n", scenario.n}, {"scenario", o.scenario}, {"trials", o.trials}};
    write_manifest(o, man);
    out << "ordering-test: chi-square " << r.chi_square << " p=" << r.p_value << " -> "
        << (r.passed ? "uniform" : "NOT uniform") << " at 0.01\n";
    return 0;
  }
  if (cmd == "consistency") {
    const ConsistencyReport r = consistency_sweep(scenario, config, sizes, grid);
    write_consistency_csv(dir / "consistency.csv", r);
    man.artifacts = {"consistency.csv"};
    man.extra = {{"scenario", o.scenario}, {"sizes", sizes}};
    write_manifest(o, man);
    out << "consistency: " << r.sizes.size() << " sample sizes -> "
        << (dir / "consistency.csv").string() << '\n';
    return 0;
  }
  throw UsageError("unknown command " + cmd);
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sign-perturbed sums with instrumental variables: exact confidence regions"};
  app.name("sps-iv");
  app.require_subcommand(1, 1);
  Options o;

  auto add_core = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "RNG seed (data and perturbation)")->required();
    sub->add_option("--m", o.m, "number of sums m (> 1)")->capture_default_str();
    sub->add_option("--q", o.q, "number of excluded ranks q (0 < q < m)")->capture_default_str();
    sub->add_option("--out", o.out, "artifact directory")->capture_default_str();
  };
  auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "arx11 | arx54")->capture_default_str();
    sub->add_option("--n", o.n, "SPS sample size")->capture_default_str();
    sub->add_option("--instruments", o.instruments, "delayed | split | same")->capture_default_str();
  };
  auto add_data = [&](CLI::App* sub) {
    add_scenario(sub);
    sub->add_option("--data", o.data, "CSV record with header t,y,u (replaces --scenario)");
    sub->add_option("--na", o.schema.na, "autoregressive order for --data")->capture_default_str();
    sub->add_option("--nb", o.schema.nb, "input order for --data")->capture_default_str();
    sub->add_option("--y-column", o.schema.y_column)->capture_default_str();
    sub->add_option("--u-column", o.schema.u_column)->capture_default_str();
    sub->add_option("--split", o.split,
                    "leading regression rows reserved for the LS guess (split instruments)")
        ->capture_default_str();
  };

  CLI::App* simulate = app.add_subcommand("simulate", "simulate a scenario and write series.csv");
  add_core(simulate);
  add_scenario(simulate);

  CLI::App* indicator = app.add_subcommand("indicator", "evaluate the membership indicator at --theta");
  add_core(indicator);
  add_data(indicator);
  indicator->add_option("--theta", o.theta, "comma-separated parameter")->required();

  CLI::App* region = app.add_subcommand("region", "trace the exact region on a grid");
  add_core(region);
  add_data(region);
  region->add_option("--lower", o.lower, "comma-separated lower bounds")->required();
  region->add_option("--upper", o.upper, "comma-separated upper bounds")->required();
  region->add_option("--resolution", o.resolution, "comma-separated cells per axis")->required();
  region->add_flag("--mask-csv", o.mask_csv, "also write region.csv (one line per cell)");

  CLI::App* ellipsoid = app.add_subcommand("ellipsoid", "compute the outer ellipsoidal approximation");
  add_core(ellipsoid);
  add_data(ellipsoid);

  CLI::App* coverage = app.add_subcommand("coverage", "Monte Carlo coverage of the true parameter");
  add_core(coverage);
  add_scenario(coverage);
  coverage->add_option("--trials", o.trials)->capture_default_str();
  coverage->add_flag("--use-ellipsoid", o.use_ellipsoid, "test the outer ellipsoid instead");

  CLI::App* consistency = app.add_subcommand("consistency", "region size against sample size");
  add_core(consistency);
  add_scenario(consistency);
  consistency->add_option("--sizes", o.sizes, "ascending sample sizes")->capture_default_str();
  consistency->add_option("--lower", o.lower, "grid lower bounds (optional)");
  consistency->add_option("--upper", o.upper, "grid upper bounds");
  consistency->add_option("--resolution", o.resolution, "grid cells per axis");

  CLI::App* ordering = app.add_subcommand("ordering-test", "chi-square uniformity of the rank at theta*");
  add_core(ordering);
  add_scenario(ordering);
  ordering->add_option("--trials", o.trials)->capture_default_str();

  CLI::App* rerun = app.add_subcommand("rerun", "repeat the run recorded in a manifest");
  rerun->add_option("--manifest", o.manifest)->required();
  rerun->add_option("--out", o.out, "artifact directory for the repeated run")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "sps-iv: " << e.what() << '\n';
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string cmd = chosen->get_name();
  try {
    if (cmd == "rerun") {
      const json man = read_json(o.manifest);
      const auto argv = man.at("argv").get<std::vector<std::string>>();
      return run_command(with_out_dir(argv, o.out), out, err);
    }
    return execute(cmd, o, args, out);
  } catch (const UsageError& e) {
    err << "sps-iv " << cmd << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "sps-iv " << cmd << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace spsiv::cli
