#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebcrl/graph.hpp"
#include "ebcrl/numeric.hpp"
#include "ebcrl/scm.hpp"
#include "ebcrl/score.hpp"

namespace ebcrl {

/// A = O diag(D) with column-orthonormal O.
struct MeasurementEstimate {
  Matrix O;
  Vector D;
  double sigma2 = 1.0;

  Matrix A() const { return O * D.asDiagonal(); }
};

/// Splits a mixing matrix into column norms and directions. Falls back to the
/// polar factor when the columns are not orthogonal.
MeasurementEstimate estimate_from_a(const Matrix& a, double sigma2);

enum class InitKind { Pca, Provided };

struct EmConfig {
  int iterations = 1000;
  double eta = 1.0;
  double lambda = 1e-5;
  SplineConfig spline;
  GraphVariant graph_variant;
  double clamp_z2_eps = 1e-6;
  double sigma2_floor = 1e-8;
  InitKind init = InitKind::Pca;
  std::optional<Matrix> init_a;        // required for InitKind::Provided
  std::optional<double> init_sigma2;   // optional override of the initial noise level
  bool oracle = false;                 // hold (O, D, sigma2) at the truth, E-steps only
  bool early_stop = false;
  double early_stop_tol = 1e-8;
  int m_step_sweeps = 50;
};

void validate_em_config(const EmConfig& config);

struct TraceRow {
  int iteration = 0;
  double sigma2 = 0.0;
  double m_objective = 0.0;
  double score_loss = 0.0;
};

struct EmResult {
  std::vector<Matrix> z_hat;   // per domain, N_e x d_Z
  std::vector<Matrix> z2_hat;  // per domain, second moments
  MeasurementEstimate estimate;
  std::vector<TraceRow> trace;
  int iterations_run = 0;
};

/// Y = X O.
Matrix project(const Matrix& o, const Matrix& x);

/// Z = (Y + eta sigma2 s(Y, a)) diag(D)^-1, row-wise. With eta = 0 the score
/// model is never evaluated.
Matrix tweedie_mean(const Matrix& y, std::span<const int> a, const ScoreModel& model,
                    const Vector& d, double sigma2, double eta);

/// Z2_ij = Z_ij^2 + eta (sigma2 / D_j^2 + sigma2^2 / D_j^2 d_j s_j), clamped
/// below at clamp_eps. eta = 1 is the second-order Tweedie formula.
Matrix tweedie_second_moment(const Matrix& z, const Matrix& y, std::span<const int> a,
                             const ScoreModel& model, const Vector& d, double sigma2,
                             double clamp_eps, double eta = 1.0);

/// Sufficient statistics of the A-update: M = sum x zᵀ and S_j = sum z2_j.
struct MStepStats {
  Matrix M;
  Vector S;
  double x_sq = 0.0;  // sum |x|^2
  long n = 0;
};

MStepStats m_step_stats(const std::vector<Matrix>& x, const std::vector<Matrix>& z,
                        const std::vector<Matrix>& z2);

/// sum_j D_j^2 S_j - 2 tr(diag(D) Oᵀ M), the negative log-likelihood in A up
/// to constants.
double m_step_objective(const Matrix& o, const Vector& d, const MStepStats& stats);

struct MStepResult {
  Matrix O;
  Vector D;
  double objective = 0.0;
};

/// O = U Vᵀ from the thin SVD of M and D_j = (Oᵀ M)_jj / S_j, refined by
/// alternating O <- polar(M diag(D)), D <- diag(Oᵀ M) / S for at most `sweeps`
/// rounds. Columns are sign-canonicalized so that D >= 0.
MStepResult m_step_A(const MStepStats& stats, int sweeps = 50);
MStepResult m_step_A(const std::vector<Matrix>& x, const std::vector<Matrix>& z,
                     const std::vector<Matrix>& z2, int sweeps = 50);

/// sigma2 = [sum_j D_j^2 S_j - 2 tr(Aᵀ M) + sum |x|^2] / (d_X N), floored.
double m_step_sigma2(const MStepStats& stats, const Matrix& a, const Vector& d, double floor);
double m_step_sigma2(const std::vector<Matrix>& x, const Matrix& a, const Vector& d,
                     const std::vector<Matrix>& z, const std::vector<Matrix>& z2, double floor);

/// Iterates project, fit_score, tweedie_mean, tweedie_second_moment,
/// m_step_A and m_step_sigma2. Throws NonFiniteError with the iteration index
/// on numerical blow-up.
EmResult run_em(const Dataset& data, const EmConfig& config);

enum class BaselineKind { TrueDag, NoShrinkage, EmptyGraph, CompleteDag, Pooled, Pca };

BaselineKind parse_method(const std::string& name);
std::string method_name(BaselineKind kind);

/// EM configuration for a method. Pca has no EM configuration; use run_pca.
EmConfig make_baseline(const EmConfig& base, BaselineKind kind);

/// O from the top principal directions of the pooled data, D = 1 and
/// Z = X O. Noise level from the trailing eigenvalues.
EmResult run_pca(const Dataset& data);

/// Runs the given method on the dataset.
EmResult run_method(const Dataset& data, const EmConfig& base, BaselineKind kind);

}  // namespace ebcrl
