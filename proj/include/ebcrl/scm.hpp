#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ebcrl/graph.hpp"
#include "ebcrl/numeric.hpp"
#include "ebcrl/rng.hpp"
#include "ebcrl/score.hpp"

namespace ebcrl {

/// g(z) = tanh(kappa z) + (kappa z)^3.
double mechanism_g(double kappa, double z);

/// Structural equation of one node:
///   z_j = scale * (sum_k w_jk g(z_k) - offset) + u_j,  u_j ~ N(0, noise_std^2).
/// offset = 0 and scale = 1 give the uncalibrated mechanism.
struct Mechanism {
  std::vector<int> parents;     // sorted, equal to dag.parents(j)
  std::vector<double> weights;  // aligned with parents
  double kappa = 3.0;
  double noise_std = 2.0;
  double offset = 0.0;
  double scale = 1.0;
};

/// Perfect mean-shift intervention: z_j := u~ with u~ ~ N(shift_mean, shift_std^2).
struct InterventionSpec {
  double shift_mean = 10.0;
  double shift_std = 1.0;
};

struct ScmSpec {
  Dag dag;
  std::vector<Mechanism> mechanisms;
  InterventionSpec intervention;
};

/// Validates one mechanism per node keyed exactly by its parents.
ScmSpec make_scm(const Dag& dag, std::vector<Mechanism> mechanisms, InterventionSpec intervention);

/// Mechanisms with weights drawn Unif[w_lo, w_hi] from `rng`.
ScmSpec random_scm(const Dag& dag, double kappa, double noise_std, double w_lo, double w_hi,
                   InterventionSpec intervention, const CounterRng& rng);

/// Sets offset/scale of every non-root node so that its parent term has mean
/// 0 and standard deviation noise_std on a pooled sample of `n_per_domain`
/// draws from each arm vector in `arms` where the node is not intervened
/// (an observational sample is used when every arm intervenes on it).
void calibrate_mechanisms(ScmSpec& spec, const std::vector<ArmMask>& arms, int n_per_domain,
                          const CounterRng& rng);

/// Ancestral sampling in topological order. Noise for sample i and node j is
/// drawn at counter (i, j) so any valid order gives identical output.
Matrix sample_scm(const ScmSpec& spec, const ArmMask& a, int n, const CounterRng& rng);
/// Same with an explicit order; ConfigError unless it is topological.
Matrix sample_scm(const ScmSpec& spec, const ArmMask& a, int n, const CounterRng& rng,
                  const std::vector<int>& order);

/// Column-orthonormal d_x x d_z matrix: Q factor of a Gaussian matrix with
/// diag(R) made positive.
Matrix sample_orthonormal_mixing(int d_x, int d_z, const CounterRng& rng);

struct DomainSpec {
  std::string name;
  ArmMask a;
  int n_samples = 0;
  double weight = 1.0;
};

struct Dataset {
  Dag dag;
  std::vector<DomainSpec> domains;
  std::vector<Matrix> x;  // per domain, N_e x d_X
  std::optional<std::vector<Matrix>> true_z;
  std::optional<Matrix> true_a;
  std::optional<double> true_sigma2;
  std::uint64_t seed = 0;

  int d_x() const { return x.empty() ? 0 : static_cast<int>(x.front().cols()); }
  int d_z() const { return dag.n_nodes(); }
  long total_n() const;
  std::vector<ArmMask> targets() const;
  std::vector<double> weights() const;
};

/// Checks shapes and target vectors (ConfigError on mismatch).
void validate_dataset(const Dataset& data);

struct BenchmarkConfig {
  int d_z = 4;
  int d_x = 100;
  std::vector<Edge> edges;  // 0-based
  double kappa = 3.0;
  double sigma_z = 2.0;
  double weight_lo = -1.0;
  double weight_hi = 1.0;
  InterventionSpec intervention;
  double sigma_x2 = 2.0;
  bool calibrate = true;
  int calibration_samples = 10000;
  std::vector<DomainSpec> domains;
  std::uint64_t seed = 0;
};

/// Chain on d_z nodes, one domain per single-node target with n samples each.
BenchmarkConfig default_benchmark_config(int d_z = 4, int d_x = 100, int n_per_domain = 2000);

void validate_benchmark_config(const BenchmarkConfig& config);

/// Draws mechanisms, A*, latents and X = Z A*ᵀ + eps for every domain.
Dataset generate_benchmark(const BenchmarkConfig& config, const CounterRng& rng);

/// The ground-truth SCM a benchmark run uses (mechanisms and calibration).
ScmSpec benchmark_scm(const BenchmarkConfig& config, const CounterRng& rng);

}  // namespace ebcrl
