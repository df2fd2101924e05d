#include "ebcrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>

#include "ebcrl/errors.hpp"

namespace ebcrl {

std::vector<int> solve_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw ConfigError("assignment cost matrix must be square");
  if (!cost.allFinite()) throw NumericError("assignment cost matrix is not finite");
  // Shortest augmenting path with potentials, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0);
  std::vector<int> way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return assignment;
}

Alignment align_columns(const Matrix& a_hat, const Matrix& a_true) {
  if (a_hat.rows() != a_true.rows() || a_hat.cols() != a_true.cols())
    throw ConfigError("align_columns: shape mismatch");
  for (Eigen::Index j = 0; j < a_hat.cols(); ++j)
    if (a_hat.col(j).squaredNorm() == 0.0 || a_true.col(j).squaredNorm() == 0.0)
      throw ConfigError("align_columns: zero column " + std::to_string(j + 1));
  // inner(j, k) = A_true(:, j)ᵀ A_hat(:, k); rows are true columns.
  const Matrix inner = a_true.transpose() * a_hat;
  const std::vector<int> match = solve_assignment(-inner.cwiseAbs());
  Alignment al;
  al.perm = match;
  for (std::size_t j = 0; j < match.size(); ++j)
    al.signs.push_back(inner(static_cast<Eigen::Index>(j), match[j]) < 0.0 ? -1 : 1);
  return al;
}

Matrix apply_alignment(const Matrix& m, const Alignment& al) {
  if (al.perm.size() != static_cast<std::size_t>(m.cols()) || al.signs.size() != al.perm.size())
    throw ConfigError("alignment does not match the number of columns");
  Matrix out(m.rows(), m.cols());
  for (std::size_t j = 0; j < al.perm.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = static_cast<double>(al.signs[j]) * m.col(al.perm[j]);
  return out;
}

double rel_mse(const Matrix& z_hat, const Matrix& z_true, const Alignment& al) {
  if (z_hat.rows() != z_true.rows() || z_hat.cols() != z_true.cols())
    throw ConfigError("rel_mse: shape mismatch");
  if (z_true.rows() == 0) throw ConfigError("rel_mse: no rows");
  const Matrix aligned = apply_alignment(z_hat, al);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z_true.rows(); ++i) {
    const double denom = z_true.row(i).squaredNorm();
    if (denom == 0.0) throw ConfigError("rel_mse: true latent row " + std::to_string(i + 1) + " has zero norm");
    total += (aligned.row(i) - z_true.row(i)).squaredNorm() / denom;
  }
  return total / static_cast<double>(z_true.rows());
}

double frobenius_error(const Matrix& a_hat, const Matrix& a_true, const Alignment& al) {
  if (a_hat.rows() != a_true.rows() || a_hat.cols() != a_true.cols())
    throw ConfigError("frobenius_error: shape mismatch");
  return (apply_alignment(a_hat, al) - a_true).squaredNorm();
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<SummaryRecord> summarize(const std::vector<MetricRecord>& records) {
  if (records.empty()) throw ConfigError("summarize: no metric records");
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.method, r.environment, r.metric}];
    if (std::isfinite(r.value)) g.push_back(r.value);
  }
  std::vector<SummaryRecord> out;
  for (const auto& [key, values] : groups) {
    SummaryRecord s;
    std::tie(s.method, s.environment, s.metric) = key;
    s.n = static_cast<int>(values.size());
    if (values.empty()) {
      s.median = s.q1 = s.q3 = s.iqr = std::numeric_limits<double>::quiet_NaN();
    } else {
      s.median = quantile(values, 0.5);
      s.q1 = quantile(values, 0.25);
      s.q3 = quantile(values, 0.75);
      s.iqr = s.q3 - s.q1;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ebcrl
