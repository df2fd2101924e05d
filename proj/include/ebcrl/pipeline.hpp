#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ebcrl/em.hpp"
#include "ebcrl/io.hpp"
#include "ebcrl/metrics.hpp"

namespace ebcrl {

/// RelMSE per environment and pooled ("all"), plus the Frobenius error of A.
/// Needs true latents and the true mixing matrix (ConfigError otherwise).
std::vector<MetricRecord> evaluate_fit(const Dataset& data, const MeasurementEstimate& est,
                                       const std::vector<Matrix>& z_hat, const std::string& method,
                                       int run_id, std::uint64_t seed);

struct BenchmarkOptions {
  std::vector<std::string> methods = {"true-dag", "no-shrinkage", "pca"};
  int runs = 5;
  int jobs = 1;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool oracle = false;
};

struct RunFailure {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::string method;
  std::string message;
};

struct BenchmarkOutcome {
  std::vector<MetricRecord> metrics;  // ordered by run, then method
  std::vector<RunFailure> failures;
  double seconds = 0.0;
};

/// Runs every method on `runs` independently generated datasets. Run r uses
/// seed derive_seed(master, r); results are merged in run order, so the
/// output does not depend on `jobs`. A failing (run, method) pair is recorded
/// and the rest continue.
BenchmarkOutcome run_benchmark(const BenchmarkConfig& bench, const EmConfig& em, const BenchmarkOptions& opt);

/// Command implementations behind the CLI. They throw ConfigError,
/// NumericError or IoError; the CLI maps these to exit codes.
void cmd_generate(const std::filesystem::path& config, const std::filesystem::path& out,
                  std::optional<std::uint64_t> seed);
void cmd_fit(const std::filesystem::path& dataset, const std::optional<std::filesystem::path>& config,
             const std::string& method, const std::filesystem::path& out, bool oracle);
/// Writes the metrics CSV to `out`, or returns it when `out` is empty.
std::string cmd_eval(const std::filesystem::path& dataset, const std::vector<std::filesystem::path>& results,
                     const std::filesystem::path& out);
void cmd_benchmark(const std::filesystem::path& config, const BenchmarkOptions& opt, const std::filesystem::path& out);
void cmd_plot(const std::filesystem::path& metrics_csv, const std::filesystem::path& out);

}  // namespace ebcrl
