#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ebcrl/em.hpp"
#include "ebcrl/metrics.hpp"
#include "ebcrl/scm.hpp"

namespace ebcrl {

inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip decimal form; "nan", "inf" and "-inf" for specials.
std::string format_double(double v);
double parse_double(const std::string& s);

/// CSV with a header row prefix1..prefixK and one matrix row per line.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::string& prefix);
/// Throws IoError when the file is missing or malformed, ConfigError when the
/// header does not match `prefix` (empty prefix skips the check).
Matrix read_matrix_csv(const std::filesystem::path& path, const std::string& prefix = "");

/// Parses JSON text, reporting syntax errors as "line L, column C".
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

struct SweepSpec {
  std::string param;  // "n_per_domain" or "d_z"
  std::vector<int> values;
};

/// Everything a config file can hold.
struct RunConfig {
  BenchmarkConfig benchmark;
  EmConfig em;
  std::optional<SweepSpec> sweep;
  /// Graph family when the config names one instead of listing edges; needed
  /// to rebuild the benchmark for a d_z sweep.
  std::string graph = "";
  bool auto_domains = false;
  int n_per_domain = 2000;
  nlohmann::json source;  // the parsed document, for manifests
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json em_config_to_json(const EmConfig& c);

/// Benchmark config for one sweep point (ConfigError when not sweepable).
BenchmarkConfig sweep_point(const RunConfig& rc, int value);

void save_dataset(const std::filesystem::path& dir, const Dataset& data,
                  std::vector<std::string>* written = nullptr);
Dataset load_dataset(const std::filesystem::path& dir);

struct FitRecord {
  std::string method;
  MeasurementEstimate estimate;
  std::vector<Matrix> z_hat;
  bool oracle = false;
};

void save_fit(const std::filesystem::path& dir, const EmResult& result, const std::string& method,
              const EmConfig& config, bool with_trace, std::vector<std::string>* written = nullptr);
FitRecord load_fit(const std::filesystem::path& dir);

/// Optional leading columns (e.g. sweep parameter and value) precede the
/// standard metric columns.
struct MetricRow {
  std::vector<std::pair<std::string, std::string>> extra;
  MetricRecord record;
};

std::string metrics_csv(const std::vector<MetricRow>& rows);
std::vector<MetricRow> parse_metrics_csv(const std::string& text);
struct SummaryRow {
  std::vector<std::pair<std::string, std::string>> extra;
  SummaryRecord record;
};

std::string summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace ebcrl
