#include "ebcrl/scm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ebcrl/errors.hpp"

namespace ebcrl {

double mechanism_g(double kappa, double z) {
  const double t = kappa * z;
  return std::tanh(t) + t * t * t;
}

ScmSpec make_scm(const Dag& dag, std::vector<Mechanism> mechanisms, InterventionSpec intervention) {
  if (mechanisms.size() != static_cast<std::size_t>(dag.n_nodes()))
    throw ConfigError("SCM needs exactly one mechanism per node");
  for (int j = 0; j < dag.n_nodes(); ++j) {
    const auto& m = mechanisms[static_cast<std::size_t>(j)];
    if (m.parents != dag.parents(j) || m.weights.size() != m.parents.size())
      throw ConfigError("mechanism of node " + std::to_string(j + 1) + " does not match its parents");
    if (!(m.noise_std > 0.0)) throw ConfigError("mechanism noise_std must be > 0");
    if (!std::isfinite(m.kappa) || !std::isfinite(m.offset) || !std::isfinite(m.scale))
      throw ConfigError("mechanism parameters must be finite");
  }
  if (!(intervention.shift_std > 0.0)) throw ConfigError("intervention std must be > 0");
  return {dag, std::move(mechanisms), intervention};
}

ScmSpec random_scm(const Dag& dag, double kappa, double noise_std, double w_lo, double w_hi,
                   InterventionSpec intervention, const CounterRng& rng) {
  if (!(w_lo <= w_hi)) throw ConfigError("weight range must satisfy lo <= hi");
  std::vector<Mechanism> mechs;
  for (int j = 0; j < dag.n_nodes(); ++j) {
    Mechanism m;
    m.parents = dag.parents(j);
    for (int k : m.parents)
      m.weights.push_back(rng.uniform(w_lo, w_hi, "weight",
                                      {static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k)}));
    m.kappa = kappa;
    m.noise_std = noise_std;
    mechs.push_back(std::move(m));
  }
  return make_scm(dag, std::move(mechs), intervention);
}

namespace {

double parent_term(const Mechanism& m, const Matrix& z, Eigen::Index i) {
  double p = 0.0;
  for (std::size_t q = 0; q < m.parents.size(); ++q) p += m.weights[q] * mechanism_g(m.kappa, z(i, m.parents[q]));
  return p;
}

// Fills column j given its parents' columns.
void sample_node(const ScmSpec& spec, int j, const ArmMask& a, Matrix& z, const CounterRng& rng) {
  const auto& m = spec.mechanisms[static_cast<std::size_t>(j)];
  const auto uj = static_cast<std::uint64_t>(j);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const auto ui = static_cast<std::uint64_t>(i);
    if (a[static_cast<std::size_t>(j)] != 0) {
      z(i, j) = spec.intervention.shift_mean + spec.intervention.shift_std * rng.normal("intervention", {ui, uj});
    } else {
      const double p = m.parents.empty() ? 0.0 : m.scale * (parent_term(m, z, i) - m.offset);
      z(i, j) = p + m.noise_std * rng.normal("noise", {ui, uj});
    }
  }
}

void check_arm(const ScmSpec& spec, const ArmMask& a) {
  if (a.size() != static_cast<std::size_t>(spec.dag.n_nodes()))
    throw ConfigError("intervention vector has length " + std::to_string(a.size()) + ", expected " +
                      std::to_string(spec.dag.n_nodes()));
  for (int v : a)
    if (v != 0 && v != 1) throw ConfigError("intervention vector entries must be 0 or 1");
}

}  // namespace

void calibrate_mechanisms(ScmSpec& spec, const std::vector<ArmMask>& arms, int n_per_domain,
                          const CounterRng& rng) {
  if (n_per_domain < 2) throw ConfigError("calibration needs at least 2 samples per domain");
  const int d = spec.dag.n_nodes();
  std::vector<ArmMask> pool = arms;
  for (int j = 0; j < d; ++j) {
    const bool observed = std::any_of(pool.begin(), pool.end(),
                                      [&](const ArmMask& a) { return a[static_cast<std::size_t>(j)] == 0; });
    if (!observed) {
      pool.emplace_back(static_cast<std::size_t>(d), 0);
      break;
    }
  }
  for (const auto& a : pool) check_arm(spec, a);

  std::vector<Matrix> z(pool.size(), Matrix::Zero(n_per_domain, d));
  for (int j : spec.dag.topo_order()) {
    auto& m = spec.mechanisms[static_cast<std::size_t>(j)];
    if (!m.parents.empty()) {
      double sum = 0.0;
      double sq = 0.0;
      long count = 0;
      for (std::size_t e = 0; e < pool.size(); ++e) {
        if (pool[e][static_cast<std::size_t>(j)] != 0) continue;
        for (Eigen::Index i = 0; i < n_per_domain; ++i) {
          const double p = parent_term(m, z[e], i);
          sum += p;
          sq += p * p;
          ++count;
        }
      }
      const double mean = sum / static_cast<double>(count);
      const double var = std::max(0.0, sq / static_cast<double>(count) - mean * mean);
      const double sd = std::sqrt(var);
      if (!std::isfinite(mean) || !std::isfinite(sd))
        throw NumericError("mechanism calibration overflowed at node " + std::to_string(j + 1));
      m.offset = mean;
      m.scale = sd > 1e-12 * (1.0 + std::abs(mean)) ? m.noise_std / sd : 1.0;
    }
    for (std::size_t e = 0; e < pool.size(); ++e) sample_node(spec, j, pool[e], z[e], rng.split("domain", e));
  }
}

Matrix sample_scm(const ScmSpec& spec, const ArmMask& a, int n, const CounterRng& rng) {
  return sample_scm(spec, a, n, rng, spec.dag.topo_order());
}

Matrix sample_scm(const ScmSpec& spec, const ArmMask& a, int n, const CounterRng& rng,
                  const std::vector<int>& order) {
  check_arm(spec, a);
  if (n < 0) throw ConfigError("sample count must be >= 0");
  const int d = spec.dag.n_nodes();
  if (order.size() != static_cast<std::size_t>(d)) throw ConfigError("sampling order must list every node");
  std::vector<int> pos(static_cast<std::size_t>(d), -1);
  for (std::size_t p = 0; p < order.size(); ++p) {
    const int j = order[p];
    if (j < 0 || j >= d || pos[static_cast<std::size_t>(j)] >= 0)
      throw ConfigError("sampling order is not a permutation");
    pos[static_cast<std::size_t>(j)] = static_cast<int>(p);
  }
  for (const auto& [k, j] : spec.dag.edges())
    if (pos[static_cast<std::size_t>(k)] > pos[static_cast<std::size_t>(j)])
      throw ConfigError("sampling order is not topological");
  Matrix z = Matrix::Zero(n, d);
  for (int j : order) sample_node(spec, j, a, z, rng);
  if (!z.allFinite()) throw NumericError("SCM sample overflowed");
  return z;
}

Matrix sample_orthonormal_mixing(int d_x, int d_z, const CounterRng& rng) {
  if (d_z < 1 || d_x < d_z)
    throw ConfigError("orthonormal mixing needs 1 <= d_z <= d_x, got d_x=" + std::to_string(d_x) +
                      ", d_z=" + std::to_string(d_z));
  Matrix g(d_x, d_z);
  for (int r = 0; r < d_x; ++r)
    for (int c = 0; c < d_z; ++c)
      g(r, c) = rng.normal("gaussian", {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)});
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d_x, d_z);
  const Matrix r = qr.matrixQR().topRows(d_z).triangularView<Eigen::Upper>();
  for (int c = 0; c < d_z; ++c)
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  return q;
}

long Dataset::total_n() const {
  long n = 0;
  for (const auto& m : x) n += static_cast<long>(m.rows());
  return n;
}

std::vector<ArmMask> Dataset::targets() const {
  std::vector<ArmMask> t;
  for (const auto& d : domains) t.push_back(d.a);
  return t;
}

std::vector<double> Dataset::weights() const {
  std::vector<double> w;
  for (const auto& d : domains) w.push_back(d.weight);
  return w;
}

void validate_dataset(const Dataset& data) {
  if (data.domains.empty()) throw ConfigError("dataset has no domains");
  if (data.domains.size() != data.x.size()) throw ConfigError("dataset: one X matrix per domain required");
  const int dx = data.d_x();
  const int dz = data.d_z();
  if (dz < 1 || dx < dz) throw ConfigError("dataset needs 1 <= d_z <= d_x");
  for (std::size_t e = 0; e < data.domains.size(); ++e) {
    const auto& dom = data.domains[e];
    if (dom.a.size() != static_cast<std::size_t>(dz))
      throw ConfigError("domain " + std::to_string(e + 1) + ": target vector length differs from d_z");
    for (int v : dom.a)
      if (v != 0 && v != 1) throw ConfigError("domain targets must be 0 or 1");
    if (data.x[e].cols() != dx) throw ConfigError("domains disagree on d_x");
    if (data.x[e].rows() != dom.n_samples || dom.n_samples < 1)
      throw ConfigError("domain " + std::to_string(e + 1) + ": sample count mismatch");
    if (!(dom.weight >= 0.0)) throw ConfigError("domain weights must be >= 0");
    if (data.true_z && (*data.true_z)[e].rows() != data.x[e].rows())
      throw ConfigError("true latents do not match the domain sample count");
  }
  if (data.true_z && data.true_z->size() != data.x.size())
    throw ConfigError("true latents: one matrix per domain required");
  if (data.true_a && (data.true_a->rows() != dx || data.true_a->cols() != dz))
    throw ConfigError("true mixing matrix has the wrong shape");
}

BenchmarkConfig default_benchmark_config(int d_z, int d_x, int n_per_domain) {
  BenchmarkConfig c;
  c.d_z = d_z;
  c.d_x = d_x;
  for (int j = 1; j < d_z; ++j) c.edges.emplace_back(j - 1, j);
  for (int j = 0; j < d_z; ++j) {
    DomainSpec d;
    d.name = "e" + std::to_string(j + 1);
    d.a.assign(static_cast<std::size_t>(d_z), 0);
    d.a[static_cast<std::size_t>(j)] = 1;
    d.n_samples = n_per_domain;
    c.domains.push_back(std::move(d));
  }
  return c;
}

void validate_benchmark_config(const BenchmarkConfig& c) {
  if (c.d_z < 1) throw ConfigError("d_z must be >= 1");
  if (c.d_x < c.d_z) throw ConfigError("d_x must be >= d_z");
  build_dag(c.d_z, c.edges);
  if (!(c.sigma_z > 0.0)) throw ConfigError("sigma_z must be > 0");
  if (!(c.sigma_x2 >= 0.0)) throw ConfigError("sigma_x2 must be >= 0");
  if (!(c.weight_lo <= c.weight_hi)) throw ConfigError("weight_range must satisfy lo <= hi");
  if (!(c.intervention.shift_std > 0.0)) throw ConfigError("intervention std must be > 0");
  if (c.calibrate && c.calibration_samples < 2) throw ConfigError("calibration samples must be >= 2");
  if (c.domains.empty()) throw ConfigError("at least one domain is required");
  for (const auto& d : c.domains) {
    if (d.a.size() != static_cast<std::size_t>(c.d_z)) throw ConfigError("domain target vector length differs from d_z");
    for (int v : d.a)
      if (v != 0 && v != 1) throw ConfigError("domain targets must be 0 or 1");
    if (d.n_samples < 1) throw ConfigError("domain sample count must be >= 1");
    if (!(d.weight >= 0.0)) throw ConfigError("domain weight must be >= 0");
  }
}

ScmSpec benchmark_scm(const BenchmarkConfig& config, const CounterRng& rng) {
  validate_benchmark_config(config);
  const Dag dag = build_dag(config.d_z, config.edges);
  ScmSpec spec = random_scm(dag, config.kappa, config.sigma_z, config.weight_lo, config.weight_hi,
                            config.intervention, rng.split("mechanism"));
  if (config.calibrate) {
    std::vector<ArmMask> arms;
    for (const auto& d : config.domains) arms.push_back(d.a);
    calibrate_mechanisms(spec, arms, config.calibration_samples, rng.split("calibration"));
  }
  return spec;
}

Dataset generate_benchmark(const BenchmarkConfig& config, const CounterRng& rng) {
  const ScmSpec spec = benchmark_scm(config, rng);
  Dataset data;
  data.dag = spec.dag;
  data.domains = config.domains;
  data.seed = rng.seed();
  data.true_a = sample_orthonormal_mixing(config.d_x, config.d_z, rng.split("mixing"));
  data.true_sigma2 = config.sigma_x2;
  data.true_z.emplace();
  const double sd = std::sqrt(config.sigma_x2);
  for (std::size_t e = 0; e < config.domains.size(); ++e) {
    auto& dom = data.domains[e];
    if (dom.name.empty()) dom.name = "e" + std::to_string(e + 1);
    Matrix z = sample_scm(spec, dom.a, dom.n_samples, rng.split("latent", e));
    Matrix x = z * data.true_a->transpose();
    if (sd > 0.0) {
      const CounterRng noise = rng.split("measurement", e);
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index k = 0; k < x.cols(); ++k)
          x(i, k) += sd * noise.normal("eps", {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(k)});
    }
    data.true_z->push_back(std::move(z));
    data.x.push_back(std::move(x));
  }
  return data;
}

}  // namespace ebcrl
