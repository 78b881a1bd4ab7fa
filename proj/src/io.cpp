#include "spsiv/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace spsiv {

namespace {

using nlohmann::json;

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = first + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(17);
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  return v;
}

json vector_to_json(const Vector& v) {
  json j = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) j.push_back(v(k));
  return j;
}

void check_version(const json& j, const char* kind) {
  if (!j.contains("format_version") || j["format_version"].get<int>() != kFormatVersion) {
    throw InputError(std::string(kind) + ": unsupported or missing format_version");
  }
}

}  // namespace

ArxSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw CsvError(CsvError::Kind::Io, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw CsvError(CsvError::Kind::TooFewRows, "'" + path.string() + "' is empty");
  }
  const std::vector<std::string> header = split_line(line);
  auto column_index = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    throw CsvError(CsvError::Kind::MissingColumn, "missing column '" + name + "'", -1, name);
  };
  const std::size_t yc = column_index(schema.y_column);
  const std::size_t uc = column_index(schema.u_column);

  std::vector<double> ys;
  std::vector<double> us;
  long row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const std::vector<std::string> cells = split_line(line);
    auto cell = [&](std::size_t col, const std::string& name) {
      double v = 0.0;
      if (col >= cells.size() || !parse_double(cells[col], v)) {
        throw CsvError(CsvError::Kind::NonNumeric,
                       "non-numeric value at row " + std::to_string(row) + ", column " + name,
                       row, name);
      }
      return v;
    };
    ys.push_back(cell(yc, schema.y_column));
    us.push_back(cell(uc, schema.u_column));
  }

  ArxSeries s{schema.na, schema.nb, Eigen::Map<Vector>(ys.data(), static_cast<Eigen::Index>(ys.size())),
              Eigen::Map<Vector>(us.data(), static_cast<Eigen::Index>(us.size()))};
  if (schema.na < 0 || schema.nb < 0 || schema.na + schema.nb < 1) {
    throw InputError("load_csv: invalid model orders");
  }
  if (s.rows() < 1) {
    throw CsvError(CsvError::Kind::TooFewRows,
                   "'" + path.string() + "' has " + std::to_string(ys.size()) +
                       " rows; at least " + std::to_string(s.history() + 1) + " are needed");
  }
  return s;
}

void write_series_csv(const std::filesystem::path& path, const ArxSeries& series) {
  auto out = open_out(path);
  out << "t,y,u\n";
  for (Eigen::Index t = 0; t < series.length(); ++t) {
    out << (t + 1) << ',' << series.y(t) << ',' << series.u(t) << '\n';
  }
}

RunLengthMask encode_rle(const std::vector<std::uint8_t>& mask) {
  RunLengthMask rle;
  if (mask.empty()) return rle;
  rle.first = mask[0];
  std::uint8_t current = mask[0];
  std::uint64_t run = 0;
  for (std::uint8_t v : mask) {
    if (v == current) {
      ++run;
    } else {
      rle.runs.push_back(run);
      current = v;
      run = 1;
    }
  }
  rle.runs.push_back(run);
  return rle;
}

std::vector<std::uint8_t> decode_rle(const RunLengthMask& rle) {
  std::vector<std::uint8_t> mask;
  std::uint8_t v = rle.first;
  for (std::uint64_t run : rle.runs) {
    mask.insert(mask.end(), run, v);
    v = v ? 0 : 1;
  }
  return mask;
}

json region_to_json(const GridRegion& region) {
  const RunLengthMask rle = encode_rle(region.mask);
  return json{{"format_version", kFormatVersion},
              {"kind", "sps_grid_region"},
              {"lower", vector_to_json(region.grid.lower)},
              {"upper", vector_to_json(region.grid.upper)},
              {"resolution", region.grid.resolution},
              {"cell_order", "axis0-fastest"},
              {"evaluated_at", "cell-centers"},
              {"m", region.m},
              {"q", region.q},
              {"seed", region.seed},
              {"accepted_cells", region.accepted()},
              {"mask_rle", {{"first", region.mask.empty() ? 0 : rle.first}, {"runs", rle.runs}}}};
}

GridRegion region_from_json(const json& j) {
  check_version(j, "grid region");
  GridRegion r;
  r.grid.lower = vector_from_json(j.at("lower"));
  r.grid.upper = vector_from_json(j.at("upper"));
  r.grid.resolution = j.at("resolution").get<std::vector<int>>();
  r.grid.validate(r.grid.lower.size());
  r.m = j.at("m").get<int>();
  r.q = j.at("q").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  RunLengthMask rle;
  rle.first = j.at("mask_rle").at("first").get<std::uint8_t>();
  rle.runs = j.at("mask_rle").at("runs").get<std::vector<std::uint64_t>>();
  r.mask = decode_rle(rle);
  if (r.mask.size() != r.grid.cell_count()) {
    throw InputError("grid region: mask length does not match the grid");
  }
  return r;
}

void write_region_csv(const std::filesystem::path& path, const GridRegion& region) {
  auto out = open_out(path);
  for (Eigen::Index k = 0; k < region.grid.lower.size(); ++k) out << "theta" << (k + 1) << ',';
  out << "inside\n";
  for (std::size_t c = 0; c < region.mask.size(); ++c) {
    const Vector center = region.grid.cell_center(c);
    for (Eigen::Index k = 0; k < center.size(); ++k) out << center(k) << ',';
    out << static_cast<int>(region.mask[c]) << '\n';
  }
}

json ext_real_to_json(const ExtReal& v) {
  if (v.is_unbounded()) return "inf";
  return v.value();
}

ExtReal ext_real_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return ExtReal::unbounded();
    throw InputError("expected a number or \"inf\"");
  }
  return ExtReal::finite(j.get<double>());
}

json outer_to_json(const OuterApproximation& outer, const SpsConfig& config) {
  const Ellipsoid& e = outer.ellipsoid;
  json shape = json::array();
  for (Eigen::Index r = 0; r < e.shape.dim(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < e.shape.dim(); ++c) row.push_back(e.shape(r, c));
    shape.push_back(row);
  }
  json gammas = json::array();
  for (const ExtReal& g : outer.gammas) gammas.push_back(ext_real_to_json(g));
  return json{{"format_version", kFormatVersion},
              {"kind", "sps_outer_ellipsoid"},
              {"center", vector_to_json(e.center)},
              {"shape", shape},
              {"radius", ext_real_to_json(e.radius)},
              {"unbounded", e.unbounded()},
              {"gammas", gammas},
              {"m", config.m()},
              {"q", config.q()},
              {"seed", config.seed()}};
}

OuterApproximation outer_from_json(const json& j) {
  check_version(j, "ellipsoid");
  const Vector center = vector_from_json(j.at("center"));
  const auto d = center.size();
  const json& rows = j.at("shape");
  if (static_cast<Eigen::Index>(rows.size()) != d) throw InputError("ellipsoid: shape size mismatch");
  Matrix shape(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != d) throw InputError("ellipsoid: shape size mismatch");
    for (Eigen::Index c = 0; c < d; ++c) shape(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  std::vector<ExtReal> gammas;
  for (const json& g : j.at("gammas")) gammas.push_back(ext_real_from_json(g));
  return OuterApproximation{Ellipsoid{center, SymMatrix(shape), ext_real_from_json(j.at("radius"))},
                            std::move(gammas)};
}

void write_coverage_csv(const std::filesystem::path& path, const CoverageReport& r) {
  auto out = open_out(path);
  out << "trials,hits,failures,empirical,target,binomial_3sigma\n";
  out << r.trials << ',' << r.hits << ',' << r.failures << ',' << r.empirical << ',' << r.target
      << ',' << r.binomial_3sigma << '\n';
}

CoverageReport read_coverage_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string header;
  std::string line;
  if (!in || !std::getline(in, header) || !std::getline(in, line)) {
    throw InputError("cannot read coverage report '" + path.string() + "'");
  }
  const auto cells = split_line(line);
  if (cells.size() != 6) throw InputError("coverage report: expected 6 columns");
  CoverageReport r;
  r.trials = std::stoull(cells[0]);
  r.hits = std::stoull(cells[1]);
  r.failures = std::stoull(cells[2]);
  parse_double(cells[3], r.empirical);
  parse_double(cells[4], r.target);
  parse_double(cells[5], r.binomial_3sigma);
  return r;
}

void write_consistency_csv(const std::filesystem::path& path, const ConsistencyReport& r) {
  auto out = open_out(path);
  out << "n,region_max_distance,accepted_cells,ellipsoid_radius\n";
  for (std::size_t k = 0; k < r.sizes.size(); ++k) {
    out << r.sizes[k] << ',';
    if (std::isnan(r.region_max_distance[k])) {
      out << "nan";
    } else {
      out << r.region_max_distance[k];
    }
    out << ',' << r.accepted_cells[k] << ',';
    if (r.ellipsoid_radius[k].is_unbounded()) {
      out << "inf";
    } else {
      out << r.ellipsoid_radius[k].value();
    }
    out << '\n';
  }
}

json ordering_to_json(const OrderingReport& r) {
  return json{{"format_version", kFormatVersion},
              {"kind", "sps_rank_uniformity"},
              {"histogram", r.histogram},
              {"trials", r.trials},
              {"failures", r.failures},
              {"chi_square", r.chi_square},
              {"p_value", r.p_value},
              {"significance", 0.01},
              {"passed", r.passed}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

}  // namespace spsiv
