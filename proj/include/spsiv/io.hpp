#pragma once

// File formats:
//   time series  CSV with header `t,y,u`, one line per sample
//   ellipsoid    JSON, radius "inf" when unbounded
//   grid region  JSON with run-length-encoded mask; optional CSV of cell centers
//   reports      CSV (coverage, consistency) or JSON (ordering, manifest)
// Every JSON document carries "format_version".

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "spsiv/errors.hpp"
#include "spsiv/harness.hpp"

namespace spsiv {

inline constexpr int kFormatVersion = 1;

class CsvError : public InputError {
 public:
  enum class Kind { Io, MissingColumn, NonNumeric, TooFewRows };

  CsvError(Kind kind, const std::string& what, long row = -1, std::string column = {})
      : InputError(what), kind_(kind), row_(row), column_(std::move(column)) {}

  Kind kind() const { return kind_; }
  /// 1-based data row (header excluded), -1 when not applicable.
  long row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  Kind kind_;
  long row_;
  std::string column_;
};

struct CsvSchema {
  std::string y_column = "y";
  std::string u_column = "u";
  int na = 1;
  int nb = 1;
};

/// Reads an input/output record. Extra columns are ignored. Requires at
/// least one sample with complete regressor history.
ArxSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema);
void write_series_csv(const std::filesystem::path& path, const ArxSeries& series);

/// Runs of equal values, starting with the value of mask[0].
struct RunLengthMask {
  std::uint8_t first = 0;
  std::vector<std::uint64_t> runs;
};
RunLengthMask encode_rle(const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> decode_rle(const RunLengthMask& rle);

nlohmann::json region_to_json(const GridRegion& region);
GridRegion region_from_json(const nlohmann::json& j);
void write_region_csv(const std::filesystem::path& path, const GridRegion& region);

nlohmann::json ext_real_to_json(const ExtReal& v);
ExtReal ext_real_from_json(const nlohmann::json& j);

nlohmann::json outer_to_json(const OuterApproximation& outer, const SpsConfig& config);
OuterApproximation outer_from_json(const nlohmann::json& j);

void write_coverage_csv(const std::filesystem::path& path, const CoverageReport& report);
CoverageReport read_coverage_csv(const std::filesystem::path& path);
void write_consistency_csv(const std::filesystem::path& path, const ConsistencyReport& report);
nlohmann::json ordering_to_json(const OrderingReport& report);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace spsiv
