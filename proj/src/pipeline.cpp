#include "ebcrl/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "ebcrl/errors.hpp"
#include "ebcrl/plot.hpp"

namespace ebcrl {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<MetricRecord> evaluate_fit(const Dataset& data, const MeasurementEstimate& est,
                                       const std::vector<Matrix>& z_hat, const std::string& method, int run_id,
                                       std::uint64_t seed) {
  if (!data.true_z || !data.true_a) throw ConfigError("evaluation needs the true latents and mixing matrix");
  if (z_hat.size() != data.x.size()) throw ConfigError("fit has a different number of domains than the dataset");
  const Matrix a_hat = est.A();
  if (a_hat.rows() != data.true_a->rows() || a_hat.cols() != data.true_a->cols())
    throw ConfigError("estimated mixing matrix shape differs from the dataset");
  const Alignment al = align_columns(a_hat, *data.true_a);
  std::vector<MetricRecord> out;
  auto rec = [&](const std::string& env, const std::string& metric, double v) {
    out.push_back({run_id, seed, method, env, metric, v});
  };
  double pooled = 0.0;
  long n = 0;
  std::vector<double> per_env;
  for (std::size_t e = 0; e < z_hat.size(); ++e) {
    const double r = rel_mse(z_hat[e], (*data.true_z)[e], al);
    per_env.push_back(r);
    pooled += r * static_cast<double>(z_hat[e].rows());
    n += static_cast<long>(z_hat[e].rows());
  }
  rec("all", "rel_mse", pooled / static_cast<double>(n));
  rec("all", "frobenius", frobenius_error(a_hat, *data.true_a, al));
  for (std::size_t e = 0; e < per_env.size(); ++e) rec(data.domains[e].name, "rel_mse", per_env[e]);
  return out;
}

BenchmarkOutcome run_benchmark(const BenchmarkConfig& bench, const EmConfig& em, const BenchmarkOptions& opt) {
  if (opt.runs < 1) throw ConfigError("--runs must be >= 1");
  if (opt.jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (opt.methods.empty()) throw ConfigError("no methods selected");
  std::vector<BaselineKind> kinds;
  for (const auto& m : opt.methods) kinds.push_back(parse_method(m));
  validate_benchmark_config(bench);
  EmConfig base = em;
  base.oracle = opt.oracle || em.oracle;
  validate_em_config(base);
  const std::uint64_t master = opt.seed ? *opt.seed : bench.seed;

  struct Slot {
    std::vector<MetricRecord> metrics;
    std::vector<RunFailure> failures;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(opt.runs));
  auto work = [&](int r) {
    Slot& slot = slots[static_cast<std::size_t>(r)];
    const std::uint64_t seed = derive_seed(master, static_cast<std::uint64_t>(r));
    Dataset data;
    try {
      BenchmarkConfig cfg = bench;
      cfg.seed = seed;
      data = generate_benchmark(cfg, CounterRng(seed));
    } catch (const std::exception& e) {
      for (const auto& m : opt.methods) slot.failures.push_back({r, seed, m, e.what()});
      return;
    }
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      try {
        const EmResult res = run_method(data, base, kinds[k]);
        auto recs = evaluate_fit(data, res.estimate, res.z_hat, opt.methods[k], r, seed);
        slot.metrics.insert(slot.metrics.end(), recs.begin(), recs.end());
      } catch (const std::exception& e) {
        slot.failures.push_back({r, seed, opt.methods[k], e.what()});
      }
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  const int workers = std::min(opt.jobs, opt.runs);
  if (workers <= 1) {
    for (int r = 0; r < opt.runs; ++r) work(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int r = next++; r < opt.runs; r = next++) work(r);
      });
    for (auto& t : pool) t.join();
  }
  BenchmarkOutcome out;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (auto& s : slots) {
    out.metrics.insert(out.metrics.end(), s.metrics.begin(), s.metrics.end());
    out.failures.insert(out.failures.end(), s.failures.begin(), s.failures.end());
  }
  return out;
}

namespace {

void write_manifest(const fs::path& out, const std::string& command, const json& config, std::uint64_t seed,
                    const std::vector<std::string>& methods, const std::vector<std::string>& outputs, double seconds) {
  json m;
  m["schema_version"] = kSchemaVersion;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["methods"] = methods;
  json files = json::array();
  for (const auto& f : outputs) files.push_back(fs::path(f).lexically_relative(out).generic_string());
  m["outputs"] = files;
  m["timing_seconds"] = seconds;
  write_text_file(out / "manifest.json", m.dump(2) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<MetricRow> as_rows(const std::vector<MetricRecord>& recs,
                               const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::vector<MetricRow> rows;
  for (const auto& r : recs) rows.push_back({extra, r});
  return rows;
}

std::string failures_csv(const std::vector<RunFailure>& fails) {
  std::string out = "run_id,seed,method,message\n";
  for (const auto& f : fails) {
    std::string msg = f.message;
    for (char& c : msg)
      if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
    out += std::to_string(f.run_id) + "," + std::to_string(f.seed) + "," + f.method + "," + msg + "\n";
  }
  return out;
}

}  // namespace

void cmd_generate(const fs::path& config, const fs::path& out, std::optional<std::uint64_t> seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig rc = load_run_config(config);
  BenchmarkConfig b = rc.benchmark;
  if (seed) b.seed = *seed;
  const Dataset data = generate_benchmark(b, CounterRng(b.seed));
  std::vector<std::string> written;
  save_dataset(out, data, &written);
  write_manifest(out, "generate", rc.source, b.seed, {}, written, seconds_since(t0));
}

void cmd_fit(const fs::path& dataset, const std::optional<fs::path>& config, const std::string& method,
             const fs::path& out, bool oracle) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = load_dataset(dataset);
  EmConfig em;
  json source = json::object();
  if (config) {
    const RunConfig rc = load_run_config(*config);
    em = rc.em;
    source = rc.source;
  }
  em.oracle = em.oracle || oracle;
  const BaselineKind kind = parse_method(method);
  if (kind == BaselineKind::Pca && oracle) throw ConfigError("--oracle does not apply to the pca method");
  const EmConfig used = kind == BaselineKind::Pca ? em : make_baseline(em, kind);
  const EmResult res = run_method(data, em, kind);
  std::vector<std::string> written;
  save_fit(out, res, method, used, kind != BaselineKind::Pca, &written);
  write_manifest(out, "fit", source, data.seed, {method}, written, seconds_since(t0));
}

std::string cmd_eval(const fs::path& dataset, const std::vector<fs::path>& results, const fs::path& out) {
  if (results.empty()) throw ConfigError("eval needs at least one result directory");
  const Dataset data = load_dataset(dataset);
  if (!data.true_z || !data.true_a) throw ConfigError("dataset " + dataset.string() + " has no ground-truth files");
  std::vector<MetricRecord> recs;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const FitRecord fit = load_fit(results[i]);
    auto r = evaluate_fit(data, fit.estimate, fit.z_hat, fit.method, static_cast<int>(i), data.seed);
    recs.insert(recs.end(), r.begin(), r.end());
  }
  const std::string csv = metrics_csv(as_rows(recs));
  if (!out.empty()) write_text_file(out, csv);
  return csv;
}

void cmd_benchmark(const fs::path& config, const BenchmarkOptions& opt, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig rc = load_run_config(config);
  const std::uint64_t master = opt.seed ? *opt.seed : rc.benchmark.seed;
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& text) {
    write_text_file(out / name, text);
    written.push_back((out / name).string());
  };

  std::vector<MetricRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<RunFailure> failures;
  std::string prefix;
  if (rc.sweep) {
    prefix = "sweep_";
    for (int v : rc.sweep->values) {
      const std::vector<std::pair<std::string, std::string>> extra = {{rc.sweep->param, std::to_string(v)}};
      const BenchmarkOutcome o = run_benchmark(sweep_point(rc, v), rc.em, opt);
      for (const auto& r : o.metrics) rows.push_back({extra, r});
      if (!o.metrics.empty())
        for (const auto& s : summarize(o.metrics)) summary.push_back({extra, s});
      failures.insert(failures.end(), o.failures.begin(), o.failures.end());
    }
  } else {
    const BenchmarkOutcome o = run_benchmark(rc.benchmark, rc.em, opt);
    rows = as_rows(o.metrics);
    if (!o.metrics.empty())
      for (const auto& s : summarize(o.metrics)) summary.push_back({{}, s});
    failures = o.failures;
    for (int r = 0; r < opt.runs; ++r) {
      std::vector<MetricRecord> mine;
      for (const auto& m : o.metrics)
        if (m.run_id == r) mine.push_back(m);
      char dir[32];
      std::snprintf(dir, sizeof dir, "runs/run_%03d", r);
      put(std::string(dir) + "/metrics.csv", metrics_csv(as_rows(mine)));
    }
  }
  put(prefix + "metrics.csv", metrics_csv(rows));
  put(prefix + "summary.csv", summary_csv(summary));
  put("failures.csv", failures_csv(failures));
  if (!rows.empty()) {
    const auto plots = write_plots(rows, out);
    written.insert(written.end(), plots.begin(), plots.end());
  }
  json source = rc.source;
  source["runs"] = opt.runs;
  source["oracle"] = opt.oracle;
  write_manifest(out, "benchmark", source, master, opt.methods, written, seconds_since(t0));
  if (rows.empty()) throw NumericError("every benchmark run failed; see " + (out / "failures.csv").string());
}

void cmd_plot(const fs::path& metrics_csv_path, const fs::path& out) {
  const auto rows = parse_metrics_csv(read_text_file(metrics_csv_path));
  write_plots(rows, out);
}

}  // namespace ebcrl
