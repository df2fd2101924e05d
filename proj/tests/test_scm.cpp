#include <gtest/gtest.h>

#include <cmath>

#include "ebcrl/errors.hpp"
#include "ebcrl/scm.hpp"

using namespace ebcrl;

namespace {

double col_mean(const Matrix& m, int j) { return m.col(j).mean(); }
double col_std(const Matrix& m, int j) {
  const double mu = col_mean(m, j);
  return std::sqrt((m.col(j).array() - mu).square().sum() / static_cast<double>(m.rows() - 1));
}

ScmSpec chain2(double w) {
  const Dag dag = chain_dag(2);
  std::vector<Mechanism> mech(2);
  mech[1].parents = {0};
  mech[1].weights = {w};
  return make_scm(dag, mech, {});
}

}  // namespace

TEST(Rng, PureFunctionOfCounter) {
  const CounterRng r(7);
  EXPECT_EQ(r.bits("a", {1, 2}), r.bits("a", {1, 2}));
  EXPECT_NE(r.bits("a", {1, 2}), r.bits("a", {2, 1}));
  EXPECT_NE(r.bits("a", {1, 2}), r.bits("b", {1, 2}));
  EXPECT_NE(r.split("x").seed(), r.split("y").seed());
  EXPECT_NE(derive_seed(42, 0), derive_seed(42, 1));
  EXPECT_EQ(derive_seed(42, 3), derive_seed(42, 3));
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform("u", {static_cast<std::uint64_t>(i)});
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  const CounterRng r(8);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal("n", {static_cast<std::uint64_t>(i)});
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Scm, MechanismFunction) {
  EXPECT_DOUBLE_EQ(mechanism_g(3.0, 0.0), 0.0);
  EXPECT_NEAR(mechanism_g(3.0, 1.0), std::tanh(3.0) + 27.0, 1e-12);
  EXPECT_NEAR(mechanism_g(3.0, -0.5), -(std::tanh(1.5) + 3.375), 1e-12);
}

TEST(Scm, FullInterventionShift) {
  const ScmSpec spec = random_scm(chain_dag(4), 3.0, 2.0, -1.0, 1.0, {}, CounterRng(1));
  const Matrix z = sample_scm(spec, {1, 1, 1, 1}, 10000, CounterRng(2));
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(col_mean(z, j), 10.0, 0.05);
    EXPECT_NEAR(col_std(z, j), 1.0, 0.05);
  }
}

TEST(Scm, EmptyGraphIsPureNoise) {
  const ScmSpec spec = random_scm(empty_dag(3), 3.0, 2.0, -1.0, 1.0, {}, CounterRng(3));
  const int n = 10000;
  const Matrix z = sample_scm(spec, {0, 0, 0}, n, CounterRng(4));
  const double se_mean = 2.0 / std::sqrt(n);
  const double se_std = 2.0 / std::sqrt(2.0 * n);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(col_mean(z, j), 0.0, 3 * se_mean);
    EXPECT_NEAR(col_std(z, j), 2.0, 3 * se_std);
  }
}

TEST(Scm, ZeroWeightSeversEdge) {
  const Matrix z = sample_scm(chain2(0.0), {0, 0}, 10000, CounterRng(5));
  const Matrix c = z.rowwise() - z.colwise().mean();
  const double rho = c.col(0).dot(c.col(1)) / (c.col(0).norm() * c.col(1).norm());
  EXPECT_LT(std::abs(rho), 0.05);
}

TEST(Scm, NonZeroWeightCouples) {
  const Matrix z = sample_scm(chain2(0.01), {0, 0}, 5000, CounterRng(5));
  const Matrix c = z.rowwise() - z.colwise().mean();
  EXPECT_GT(std::abs(c.col(0).dot(c.col(1))) / (c.col(0).norm() * c.col(1).norm()), 0.3);
}

TEST(Scm, OrderIndependent) {
  const Dag dag = build_dag(3, {{0, 2}, {1, 2}});
  const ScmSpec spec = random_scm(dag, 3.0, 2.0, -1.0, 1.0, {}, CounterRng(6));
  const Matrix a = sample_scm(spec, {0, 0, 0}, 50, CounterRng(7), {0, 1, 2});
  const Matrix b = sample_scm(spec, {0, 0, 0}, 50, CounterRng(7), {1, 0, 2});
  EXPECT_EQ(a, b);
  EXPECT_THROW(sample_scm(spec, {0, 0, 0}, 5, CounterRng(7), {2, 0, 1}), ConfigError);
  EXPECT_THROW(sample_scm(spec, {0, 2, 0}, 5, CounterRng(7)), ConfigError);
  EXPECT_THROW(sample_scm(spec, {0, 0}, 5, CounterRng(7)), ConfigError);
}

TEST(Scm, MechanismMustMatchParents) {
  std::vector<Mechanism> mech(2);
  EXPECT_THROW(make_scm(chain_dag(2), mech, {}), ConfigError);
  EXPECT_THROW(make_scm(chain_dag(2), std::vector<Mechanism>(1), {}), ConfigError);
}

TEST(Scm, CalibrationStandardizesParentTerm) {
  ScmSpec spec = random_scm(chain_dag(3), 3.0, 2.0, -1.0, 1.0, {}, CounterRng(9));
  const std::vector<ArmMask> arms = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  calibrate_mechanisms(spec, arms, 20000, CounterRng(10));
  // node 2 observational sample: parent term should be roughly N(0, 4) scaled
  const Matrix z = sample_scm(spec, {0, 0, 0}, 20000, CounterRng(11));
  for (int j = 1; j < 3; ++j) {
    EXPECT_TRUE(std::isfinite(col_std(z, j)));
    EXPECT_LT(col_std(z, j), 10.0);
  }
  EXPECT_DOUBLE_EQ(spec.mechanisms[0].scale, 1.0);
}

TEST(Scm, OrthonormalMixing) {
  const Matrix a = sample_orthonormal_mixing(100, 4, CounterRng(12));
  EXPECT_LT((a.transpose() * a - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix q = sample_orthonormal_mixing(3, 3, CounterRng(13));
  EXPECT_NEAR(std::abs(q.determinant()), 1.0, 1e-10);
  EXPECT_THROW(sample_orthonormal_mixing(2, 3, CounterRng(14)), ConfigError);
}

TEST(Scm, DefaultBenchmarkShapes) {
  const BenchmarkConfig c = default_benchmark_config();
  const Dataset d = generate_benchmark(c, CounterRng(15));
  ASSERT_EQ(d.x.size(), 4u);
  for (std::size_t e = 0; e < 4; ++e) {
    EXPECT_EQ(d.x[e].rows(), 2000);
    EXPECT_EQ(d.x[e].cols(), 100);
    EXPECT_EQ(d.domains[e].a[e], 1);
    EXPECT_EQ(std::count(d.domains[e].a.begin(), d.domains[e].a.end(), 1), 1);
  }
  ASSERT_TRUE(d.true_z && d.true_a && d.true_sigma2);
  EXPECT_DOUBLE_EQ(*d.true_sigma2, 2.0);
  EXPECT_EQ(d.dag, chain_dag(4));
  EXPECT_NO_THROW(validate_dataset(d));
}

TEST(Scm, NoiselessMixing) {
  BenchmarkConfig c = default_benchmark_config(3, 10, 200);
  c.sigma_x2 = 0.0;
  const Dataset d = generate_benchmark(c, CounterRng(16));
  for (std::size_t e = 0; e < d.x.size(); ++e) {
    const Matrix clean = (*d.true_z)[e] * d.true_a->transpose();
    EXPECT_EQ((d.x[e] - clean).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Scm, SingleDomainNormalMeans) {
  BenchmarkConfig c = default_benchmark_config(1, 1, 5000);
  c.edges.clear();
  c.domains = {{"obs", {0}, 5000, 1.0}};
  c.sigma_x2 = 1.0;
  const Dataset d = generate_benchmark(c, CounterRng(17));
  ASSERT_EQ(d.x.size(), 1u);
  EXPECT_NEAR(std::abs((*d.true_a)(0, 0)), 1.0, 1e-12);
  const Matrix resid = d.x[0] - (*d.true_z)[0] * d.true_a->transpose();
  EXPECT_NEAR(resid.squaredNorm() / 5000.0, 1.0, 0.06);
}

TEST(Scm, GenerationDeterministic) {
  const BenchmarkConfig c = default_benchmark_config(4, 20, 300);
  const Dataset a = generate_benchmark(c, CounterRng(18));
  const Dataset b = generate_benchmark(c, CounterRng(18));
  const Dataset other = generate_benchmark(c, CounterRng(19));
  for (std::size_t e = 0; e < a.x.size(); ++e) {
    EXPECT_EQ(a.x[e], b.x[e]);
    EXPECT_NE(a.x[e], other.x[e]);
  }
}

TEST(Scm, ConfigValidation) {
  BenchmarkConfig c = default_benchmark_config(4, 20, 100);
  c.domains[0].n_samples = 0;
  EXPECT_THROW(validate_benchmark_config(c), ConfigError);
  c = default_benchmark_config(4, 3, 100);
  EXPECT_THROW(validate_benchmark_config(c), ConfigError);
  c = default_benchmark_config(4, 20, 100);
  c.domains[1].a = {0, 1};
  EXPECT_THROW(validate_benchmark_config(c), ConfigError);
}
