#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ebcrl/numeric.hpp"

namespace ebcrl {

/// Signed column permutation: true column j is matched by estimated column
/// perm[j] multiplied by signs[j].
struct Alignment {
  std::vector<int> perm;
  std::vector<int> signs;
};

/// Min-cost perfect assignment on a square cost matrix (Hungarian method).
/// Returns assignment[row] = column.
std::vector<int> solve_assignment(const Matrix& cost);

/// Signed permutation maximizing sum_j |A_hat(:, perm[j])ᵀ A_true(:, j)|.
Alignment align_columns(const Matrix& a_hat, const Matrix& a_true);

/// Reorders and flips the columns of `m` (latents in columns) into the
/// reference gauge.
Matrix apply_alignment(const Matrix& m, const Alignment& al);

/// Mean over rows of |z_hat - z_true|^2 / |z_true|^2 after alignment.
double rel_mse(const Matrix& z_hat, const Matrix& z_true, const Alignment& al);

/// Squared Frobenius norm of the aligned difference.
double frobenius_error(const Matrix& a_hat, const Matrix& a_true, const Alignment& al);

struct MetricRecord {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::string method;
  std::string environment;
  std::string metric;
  double value = 0.0;
};

struct SummaryRecord {
  std::string method;
  std::string environment;
  std::string metric;
  int n = 0;  // finite values summarized
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
};

/// Linear-interpolation quantile (type 7) of unsorted values.
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

/// Median and interquartile range per (method, environment, metric), sorted
/// by key. Non-finite values (failed runs) are excluded from the statistics.
std::vector<SummaryRecord> summarize(const std::vector<MetricRecord>& records);

}  // namespace ebcrl
