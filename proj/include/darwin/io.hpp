#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "darwin/estimate.hpp"
#include "darwin/montecarlo.hpp"
#include "darwin/process.hpp"
#include "darwin/theory.hpp"

namespace darwin::io {

using nlohmann::json;

// Price-to-observation transforms applied at ingestion. Log returns require
// strictly positive inputs; the pct variant multiplies by 100.
enum class Transform { None, LogReturn, LogReturnPct };

Transform transform_from_string(std::string_view name);
std::string_view to_string(Transform t);

struct IngestConfig {
  std::string path;
  std::string column = "0";  // header name, or all-digits 0-based index
  Transform transform = Transform::None;
  bool drop_na = false;
};

// Reads one numeric column of a headered CSV (comma separator, dot decimal)
// and applies the transform. Errors name the offending line.
Series load_series(const IngestConfig& cfg);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);
// Fixed 4-decimal form for human-facing tables.
std::string fixed4(double v);

void write_path_csv(std::ostream& os, const Path& path);
void write_series_csv(std::ostream& os, const Series& series);
void write_residuals_csv(std::ostream& os, std::span<const double> residuals);

// Residual correlogram: plain and squared ACFs with their PACFs, one row
// per lag.
struct AcfTable {
  std::vector<double> acf, pacf, acf_squared, pacf_squared;
};
AcfTable residual_acf_table(std::span<const double> residuals, std::size_t max_lag);
void write_acf_csv(std::ostream& os, const AcfTable& table);
json to_json(const AcfTable& table);
void write_study_csv(std::ostream& os, const StudyTable& table);
void write_power_csv(std::ostream& os, const PowerTable& table);
void write_hist_csv(std::ostream& os, const SamplingDistribution& hist);
void write_clt_csv(std::ostream& os, const CltReport& report);

json to_json(const Path& path);
json to_json(const Series& series);
json to_json(const StabilityReport& report);
json to_json(const QmleFit& fit, bool include_residuals = true);
json to_json(const WaldReport& report);
json to_json(const LyapunovProfile& profile);
json to_json(const AsymptoticSd& sd);
json to_json(const StudyTable& table);
json to_json(const PowerTable& table);
json to_json(const SamplingDistribution& hist);
json to_json(const CltReport& report);
json to_json(const DarFit& fit);

std::string_view to_string(StudyTarget target);
StudyTarget study_target_from_string(std::string_view name);

}  // namespace darwin::io
