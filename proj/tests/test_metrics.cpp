#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ebcrl/errors.hpp"
#include "ebcrl/metrics.hpp"

using namespace ebcrl;

namespace {

Matrix gaussian(int n, int d, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Matrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = nd(gen);
  return m;
}

// Exhaustive search over signed permutations.
double brute_force_score(const Matrix& ah, const Matrix& at) {
  std::vector<int> p(static_cast<std::size_t>(at.cols()));
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<int>(i);
  double best = -1.0;
  do {
    double s = 0.0;
    for (int j = 0; j < at.cols(); ++j) s += std::abs(ah.col(p[static_cast<std::size_t>(j)]).dot(at.col(j)));
    best = std::max(best, s);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

MetricRecord rec(const std::string& method, const std::string& env, double v, int run = 0) {
  return {run, 1, method, env, "rel_mse", v};
}

}  // namespace

TEST(Metrics, AssignmentSmall) {
  Matrix c(3, 3);
  c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto a = solve_assignment(c);
  double cost = 0.0;
  for (int i = 0; i < 3; ++i) cost += c(i, a[static_cast<std::size_t>(i)]);
  EXPECT_DOUBLE_EQ(cost, 5.0);
}

TEST(Metrics, SwappedAndNegatedColumns) {
  const Matrix at = gaussian(6, 3, 1);
  Matrix ah = at;
  ah.col(0) = at.col(1);
  ah.col(1) = -at.col(0);
  const Alignment al = align_columns(ah, at);
  EXPECT_EQ(al.perm, (std::vector<int>{1, 0, 2}));
  EXPECT_EQ(al.signs, (std::vector<int>{-1, 1, 1}));
  EXPECT_DOUBLE_EQ(frobenius_error(ah, at, al), 0.0);
}

TEST(Metrics, IdentityAlignment) {
  const Matrix at = gaussian(5, 3, 2);
  const Alignment al = align_columns(at, at);
  EXPECT_EQ(al.perm, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(al.signs, (std::vector<int>{1, 1, 1}));
}

TEST(Metrics, BruteForceAgreement) {
  for (unsigned s = 0; s < 50; ++s) {
    const Matrix ah = gaussian(6, 3, 100 + s), at = gaussian(6, 3, 200 + s);
    const Alignment al = align_columns(ah, at);
    double got = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double ip = ah.col(al.perm[static_cast<std::size_t>(j)]).dot(at.col(j));
      got += std::abs(ip);
      EXPECT_EQ(al.signs[static_cast<std::size_t>(j)], ip >= 0 ? 1 : -1);
    }
    EXPECT_NEAR(got, brute_force_score(ah, at), 1e-12);
  }
}

TEST(Metrics, RelMseIdentities) {
  const Matrix z = gaussian(50, 3, 3);
  const Alignment id{{0, 1, 2}, {1, 1, 1}};
  EXPECT_DOUBLE_EQ(rel_mse(z, z, id), 0.0);
  EXPECT_NEAR(rel_mse(2.0 * z, z, id), 1.0, 1e-12);
  EXPECT_NEAR(rel_mse(Matrix::Zero(50, 3), z, id), 1.0, 1e-12);
  const Alignment flip{{2, 1, 0}, {-1, 1, 1}};
  Matrix zh(50, 3);
  zh.col(2) = -z.col(0);
  zh.col(1) = z.col(1);
  zh.col(0) = z.col(2);
  EXPECT_NEAR(rel_mse(zh, z, flip), 0.0, 1e-15);
  EXPECT_EQ(apply_alignment(zh, flip), z);
}

TEST(Metrics, FrobeniusDefinition) {
  const Matrix a = gaussian(4, 2, 4);
  Matrix e = gaussian(4, 2, 5);
  e *= 0.3 / e.norm();
  const Alignment id{{0, 1}, {1, 1}};
  EXPECT_NEAR(frobenius_error(a + e, a, id), 0.09, 1e-12);
  EXPECT_DOUBLE_EQ(frobenius_error(a, a, id), 0.0);
}

TEST(Metrics, ShapeMismatch) {
  EXPECT_THROW(align_columns(gaussian(4, 2, 6), gaussian(4, 3, 7)), ConfigError);
  const Alignment id{{0, 1}, {1, 1}};
  EXPECT_THROW(rel_mse(gaussian(4, 2, 6), gaussian(5, 2, 7), id), ConfigError);
}

TEST(Metrics, Quantiles) {
  const std::vector<double> v = {5, 3, 1, 4, 2};
  EXPECT_DOUBLE_EQ(median(v), 3.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.75), 4.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2}, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.25), 1.75);
  EXPECT_THROW(quantile({}, 0.5), ConfigError);
}

TEST(Metrics, SummarySingleRun) {
  const auto s = summarize({rec("true-dag", "all", 0.4)});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].median, 0.4);
  EXPECT_DOUBLE_EQ(s[0].iqr, 0.0);
  EXPECT_EQ(s[0].n, 1);
}

TEST(Metrics, SummaryFiveValues) {
  std::vector<MetricRecord> r;
  for (int i = 1; i <= 5; ++i) r.push_back(rec("m", "all", i, i));
  const auto s = summarize(r);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].median, 3.0);
  EXPECT_DOUBLE_EQ(s[0].q1, 2.0);
  EXPECT_DOUBLE_EQ(s[0].q3, 4.0);
  EXPECT_DOUBLE_EQ(s[0].iqr, 2.0);
}

TEST(Metrics, SummaryOrderInvariantAndGrouped) {
  std::vector<MetricRecord> r = {rec("b", "e1", 1.0), rec("a", "all", 2.0), rec("b", "e1", 3.0),
                                 rec("a", "all", NAN), rec("a", "e2", 5.0)};
  const auto s1 = summarize(r);
  std::reverse(r.begin(), r.end());
  const auto s2 = summarize(r);
  ASSERT_EQ(s1.size(), 3u);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    EXPECT_EQ(s1[i].method, s2[i].method);
    EXPECT_EQ(s1[i].environment, s2[i].environment);
    EXPECT_EQ(s1[i].median, s2[i].median);
  }
  EXPECT_EQ(s1[0].method, "a");
  EXPECT_EQ(s1[0].environment, "all");
  EXPECT_EQ(s1[0].n, 1);
  EXPECT_DOUBLE_EQ(s1[2].median, 2.0);
}
