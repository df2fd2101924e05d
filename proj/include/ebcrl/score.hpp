#pragma once

#include <array>
#include <span>
#include <vector>

#include "json.hpp"

#include "ebcrl/graph.hpp"
#include "ebcrl/numeric.hpp"
#include "ebcrl/splines.hpp"

namespace ebcrl {

/// Binary intervention indicator per node, a[j] in {0, 1}.
using ArmMask = std::vector<int>;

struct SplineConfig {
  int n_basis = 8;
  double lo = -15.0;
  double hi = 15.0;
  long max_features = TensorBasis::kDefaultMaxFeatures;
};

/// Causal score s_j(y_j, y_pa(j), a_j) = phi_j(y_j, y_pa(j))ᵀ theta[j][a_j].
struct ScoreModel {
  Dag dag;
  SplineConfig spline;
  double lambda = 1e-3;
  std::vector<TensorBasis> bases;              // per node
  std::vector<std::array<Vector, 2>> theta;    // per node, per arm
  /// Unregularized training loss per node and arm (0 for empty arms).
  std::vector<std::array<double, 2>> train_loss;

  int n_nodes() const noexcept { return dag.n_nodes(); }

  /// Score and own-coordinate derivative for one latent point. `ws` is
  /// scratch space so callers can avoid reallocations in tight loops.
  void evaluate(std::span<const double> y, std::span<const int> a, double* s, double* ds,
                SparseFeatures& ws) const;
};

/// Zero-coefficient model for `dag` (score identically 0).
ScoreModel make_zero_score(const Dag& dag, const SplineConfig& spline, double lambda);

/// Per-sample weights w_e / (N_e sum_e' w_e'). Throws ConfigError on negative
/// weights or a zero total.
std::vector<double> sample_weights(const std::vector<Matrix>& y, const std::vector<double>& weights);

/// Ridge score matching, solved independently per node and arm:
/// theta = -(Phiᵀ W Phi + lambda I)^-1 Psiᵀ W 1, where Phi / Psi hold the
/// features / own-coordinate derivatives of the rows in that arm.
ScoreModel fit_score(const std::vector<Matrix>& y, const std::vector<ArmMask>& targets,
                     const std::vector<double>& weights, const Dag& dag,
                     const SplineConfig& spline, double lambda);

Vector eval_score(const ScoreModel& model, std::span<const double> y, std::span<const int> a);
Vector eval_score_dself(const ScoreModel& model, std::span<const double> y,
                        std::span<const int> a);

/// Row-wise evaluation over a sample matrix sharing one arm vector.
void eval_score_rows(const ScoreModel& model, const Matrix& y, std::span<const int> a,
                     Matrix& s, Matrix& ds);

/// sum_e w_e / (N_e sum w) sum_i sum_j [d_j s_j + s_j^2 / 2].
double empirical_loss(const ScoreModel& model, const std::vector<Matrix>& y,
                      const std::vector<ArmMask>& targets, const std::vector<double>& weights);

/// empirical_loss plus (lambda / 2) sum_{j,a} |theta_ja|^2.
double regularized_objective(const ScoreModel& model, const std::vector<Matrix>& y,
                             const std::vector<ArmMask>& targets,
                             const std::vector<double>& weights);

nlohmann::json score_to_json(const ScoreModel& model);
ScoreModel score_from_json(const nlohmann::json& j);

}  // namespace ebcrl
