#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "ebcrl/errors.hpp"
#include "ebcrl/io.hpp"
#include "ebcrl/pipeline.hpp"
#include "ebcrl/plot.hpp"

using namespace ebcrl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ebcrl_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json small_config() {
  return json::parse(R"({"schema_version": 1, "seed": 5, "d_z": 3, "d_x": 8, "graph": "chain",
                         "n_per_domain": 100, "mechanism_calibration": {"samples": 500},
                         "em": {"iterations": 3}})");
}

}  // namespace

TEST(Io, DoubleRoundTrip) {
  for (double v : {0.1, -3.25e-300, 1e308, 2.0 / 3.0, 0.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_TRUE(std::isnan(parse_double("nan")));
  EXPECT_EQ(parse_double("-inf"), -INFINITY);
  EXPECT_THROW(parse_double("1.5x"), IoError);
}

TEST(Io, MatrixCsvRoundTrip) {
  const fs::path d = scratch("csv");
  Matrix m(2, 3);
  m << 1.5, -2, 1e-17, 3, 0.1, 7;
  write_matrix_csv(d / "m.csv", m, "x");
  EXPECT_EQ(read_matrix_csv(d / "m.csv", "x"), m);
  EXPECT_THROW(read_matrix_csv(d / "m.csv", "z"), ConfigError);
  EXPECT_THROW(read_matrix_csv(d / "missing.csv"), IoError);
  write_text_file(d / "ragged.csv", "x1,x2\n1,2\n3\n");
  EXPECT_THROW(read_matrix_csv(d / "ragged.csv"), IoError);
}

TEST(Io, JsonSyntaxErrorHasLine) {
  try {
    parse_json_text("{\n  \"a\": 1,\n  \"b\": }\n", "cfg.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Io, ConfigDefaultsAndDomains) {
  const RunConfig rc = parse_run_config(small_config());
  EXPECT_EQ(rc.benchmark.d_z, 3);
  EXPECT_EQ(rc.benchmark.domains.size(), 3u);
  EXPECT_EQ(rc.benchmark.domains[1].a, (ArmMask{0, 1, 0}));
  EXPECT_EQ(rc.benchmark.edges, (std::vector<Edge>{{0, 1}, {1, 2}}));
  EXPECT_EQ(rc.em.iterations, 3);
  EXPECT_EQ(rc.benchmark.calibration_samples, 500);
}

TEST(Io, ConfigExplicitDomainsAndEdges) {
  const json j = json::parse(R"({"d_z": 2, "d_x": 4, "edges": [[1, 2]],
      "domains": [{"name": "obs", "targets": [], "n": 10}, {"name": "do2", "targets": [2], "n": 20, "weight": 2}]})");
  const RunConfig rc = parse_run_config(j);
  ASSERT_EQ(rc.benchmark.domains.size(), 2u);
  EXPECT_EQ(rc.benchmark.domains[0].a, (ArmMask{0, 0}));
  EXPECT_EQ(rc.benchmark.domains[1].a, (ArmMask{0, 1}));
  EXPECT_EQ(rc.benchmark.domains[1].weight, 2.0);
}

TEST(Io, ConfigErrors) {
  json j = small_config();
  j["bogus"] = 1;
  EXPECT_THROW(parse_run_config(j), ConfigError);
  j = small_config();
  j["schema_version"] = 99;
  EXPECT_THROW(parse_run_config(j), ConfigError);
  j = json::parse(R"({"d_z": 2, "d_x": 4, "domains": [{"targets": [1], "n": 0}]})");
  EXPECT_THROW(parse_run_config(j), ConfigError);
  j = json::parse(R"({"d_z": 2, "d_x": 4, "edges": [[1, 2], [2, 1]]})");
  EXPECT_THROW(parse_run_config(j), CycleError);
  j = json::parse(R"({"d_z": 2, "d_x": 4, "edges": [[1, 3]]})");
  EXPECT_THROW(parse_run_config(j), IndexError);
  j = small_config();
  j["em"]["eta"] = "one";
  EXPECT_THROW(parse_run_config(j), ConfigError);
  j = small_config();
  j["sweep"] = {{"param", "d_x"}, {"values", {1}}};
  EXPECT_THROW(parse_run_config(j), ConfigError);
}

TEST(Io, SweepPoints) {
  json j = small_config();
  j["sweep"] = {{"param", "n_per_domain"}, {"values", {50, 80}}};
  const RunConfig rc = parse_run_config(j);
  EXPECT_EQ(sweep_point(rc, 80).domains[0].n_samples, 80);
  j["sweep"] = {{"param", "d_z"}, {"values", {2, 5}}};
  const RunConfig rz = parse_run_config(j);
  const BenchmarkConfig b = sweep_point(rz, 5);
  EXPECT_EQ(b.d_z, 5);
  EXPECT_EQ(b.domains.size(), 5u);
  EXPECT_EQ(b.edges.size(), 4u);
}

TEST(Io, DatasetRoundTrip) {
  const fs::path d = scratch("dataset");
  const RunConfig rc = parse_run_config(small_config());
  const Dataset data = generate_benchmark(rc.benchmark, CounterRng(3));
  save_dataset(d, data);
  const Dataset back = load_dataset(d);
  EXPECT_EQ(back.dag, data.dag);
  ASSERT_EQ(back.x.size(), data.x.size());
  for (std::size_t e = 0; e < data.x.size(); ++e) {
    EXPECT_EQ(back.x[e], data.x[e]);
    EXPECT_EQ((*back.true_z)[e], (*data.true_z)[e]);
    EXPECT_EQ(back.domains[e].a, data.domains[e].a);
  }
  EXPECT_EQ(*back.true_a, *data.true_a);
  EXPECT_EQ(*back.true_sigma2, *data.true_sigma2);
  EXPECT_THROW(load_dataset(d / "nothing"), IoError);
}

TEST(Io, MetricsCsvRoundTrip) {
  std::vector<MetricRow> rows = {{{}, {0, 11, "true-dag", "all", "rel_mse", 0.25}},
                                 {{}, {1, 12, "pca", "e1", "frobenius", NAN}}};
  const std::string csv = metrics_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "run_id,seed,method,environment,metric,value");
  const auto back = parse_metrics_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].record.method, "true-dag");
  EXPECT_EQ(back[0].record.value, 0.25);
  EXPECT_EQ(back[1].record.seed, 12u);
  EXPECT_TRUE(std::isnan(back[1].record.value));
  EXPECT_THROW(parse_metrics_csv(""), ConfigError);
  EXPECT_THROW(parse_metrics_csv("a,b\n1,2\n"), ConfigError);
}

TEST(Io, SummaryCsvHeader) {
  const std::string s = summary_csv({{{}, {"m", "all", "rel_mse", 1, 0.5, 0.5, 0.5, 0.0}}});
  EXPECT_EQ(s, "method,environment,metric,n,median,q1,q3,iqr\nm,all,rel_mse,1,0.5,0.5,0.5,0\n");
}

TEST(Plot, DeterministicAndFamilies) {
  const fs::path d1 = scratch("plot1"), d2 = scratch("plot2");
  std::vector<MetricRow> rows;
  for (int r = 0; r < 3; ++r) {
    rows.push_back({{}, {r, 1, "true-dag", "all", "rel_mse", 0.1 * (r + 1)}});
    rows.push_back({{}, {r, 1, "true-dag", "e1", "rel_mse", 0.2 * (r + 1)}});
  }
  const auto f1 = write_plots(rows, d1);
  write_plots(rows, d2);
  EXPECT_TRUE(fs::exists(d1 / "methods_rel_mse.svg"));
  EXPECT_TRUE(fs::exists(d1 / "environments_rel_mse.svg"));
  for (const auto& f : f1) {
    const fs::path name = fs::path(f).filename();
    EXPECT_EQ(read_text_file(d1 / name), read_text_file(d2 / name));
  }
  const std::string svg = read_text_file(d1 / "methods_rel_mse.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_THROW(write_plots({}, d1), ConfigError);
}

TEST(Plot, SweepFamily) {
  const fs::path d = scratch("plot_sweep");
  std::vector<MetricRow> rows;
  for (int v : {100, 200})
    rows.push_back({{{"n_per_domain", std::to_string(v)}}, {0, 1, "true-dag", "all", "rel_mse", 1.0 / v}});
  write_plots(rows, d);
  EXPECT_TRUE(fs::exists(d / "sweep_rel_mse.svg"));
}

TEST(Pipeline, EvaluateTruthIsZero) {
  const RunConfig rc = parse_run_config(small_config());
  const Dataset data = generate_benchmark(rc.benchmark, CounterRng(4));
  const MeasurementEstimate est = estimate_from_a(*data.true_a, 2.0);
  const auto recs = evaluate_fit(data, est, *data.true_z, "truth", 0, 4);
  ASSERT_EQ(recs.size(), 2u + data.x.size());
  for (const auto& r : recs) EXPECT_NEAR(r.value, 0.0, 1e-20);
  std::vector<Matrix> zero;
  for (const auto& z : *data.true_z) zero.push_back(Matrix::Zero(z.rows(), z.cols()));
  for (const auto& r : evaluate_fit(data, est, zero, "zero", 0, 4))
    if (r.metric == "rel_mse") EXPECT_NEAR(r.value, 1.0, 1e-12);
}

TEST(Pipeline, BenchmarkJobsDoNotChangeResults) {
  const RunConfig rc = parse_run_config(small_config());
  BenchmarkOptions o1;
  o1.methods = {"true-dag", "pca"};
  o1.runs = 3;
  BenchmarkOptions o2 = o1;
  o2.jobs = 3;
  const auto a = run_benchmark(rc.benchmark, rc.em, o1);
  const auto b = run_benchmark(rc.benchmark, rc.em, o2);
  ASSERT_EQ(a.metrics.size(), b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    EXPECT_EQ(a.metrics[i].run_id, b.metrics[i].run_id);
    EXPECT_EQ(a.metrics[i].value, b.metrics[i].value);
  }
  EXPECT_TRUE(a.failures.empty());
}

TEST(Pipeline, FailingMethodIsIsolated) {
  RunConfig rc = parse_run_config(small_config());
  BenchmarkOptions o;
  o.methods = {"pca", "true-dag"};
  o.runs = 2;
  o.oracle = true;
  EmConfig em = rc.em;
  em.spline.max_features = 4;  // every EM fit now fails at basis construction
  const auto out = run_benchmark(rc.benchmark, em, o);
  EXPECT_EQ(out.failures.size(), 2u);
  for (const auto& f : out.failures) EXPECT_EQ(f.method, "true-dag");
  EXPECT_EQ(out.metrics.size(), 2u * (2u + 3u));
}
