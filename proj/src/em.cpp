#include "ebcrl/em.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ebcrl/errors.hpp"

namespace ebcrl {

MeasurementEstimate estimate_from_a(const Matrix& a, double sigma2) {
  if (a.cols() < 1 || a.rows() < a.cols()) throw ConfigError("mixing matrix must be tall");
  MeasurementEstimate est;
  est.sigma2 = sigma2;
  est.D = a.colwise().norm().transpose();
  if ((est.D.array() <= 0.0).any()) throw ConfigError("mixing matrix has a zero column");
  est.O = a * est.D.cwiseInverse().asDiagonal();
  if (orthonormality_error(est.O) > 1e-8) est.O = polar_factor(est.O);
  return est;
}

void validate_em_config(const EmConfig& c) {
  if (c.iterations < 1) throw ConfigError("em.iterations must be >= 1");
  if (!(c.eta >= 0.0 && c.eta <= 1.0)) throw ConfigError("em.eta must lie in [0, 1]");
  if (!(c.lambda > 0.0)) throw ConfigError("em.lambda must be > 0");
  if (c.spline.n_basis < 4) throw ConfigError("em.knots must be >= 4");
  if (!(c.spline.lo < c.spline.hi)) throw ConfigError("em.knot_range must satisfy lo < hi");
  if (!(c.clamp_z2_eps > 0.0)) throw ConfigError("em.clamp_z2_eps must be > 0");
  if (!(c.sigma2_floor > 0.0)) throw ConfigError("em.sigma2_floor must be > 0");
  if (c.m_step_sweeps < 0) throw ConfigError("em.m_step_sweeps must be >= 0");
  if (c.init == InitKind::Provided && !c.init_a) throw ConfigError("em.init = provided needs a mixing matrix");
  if (c.init_sigma2 && !(*c.init_sigma2 > 0.0)) throw ConfigError("initial sigma2 must be > 0");
}

Matrix project(const Matrix& o, const Matrix& x) {
  if (x.cols() != o.rows()) throw ConfigError("project: X has " + std::to_string(x.cols()) +
                                              " columns but O has " + std::to_string(o.rows()) + " rows");
  return x * o;
}

namespace {

void check_d(const Vector& d) {
  for (Eigen::Index j = 0; j < d.size(); ++j)
    if (d(j) == 0.0) throw NumericError("D has a zero entry at column " + std::to_string(j + 1));
}

// Both Tweedie moments from one pass of score evaluations.
void e_step(const Matrix& y, std::span<const int> a, const ScoreModel& model, const Vector& d,
            double sigma2, double eta, double clamp_eps, Matrix& z, Matrix& z2) {
  check_d(d);
  const Eigen::RowVectorXd inv = d.cwiseInverse().transpose();
  if (eta == 0.0) {
    z = y * inv.asDiagonal();
    z2 = z.cwiseProduct(z);
  } else {
    Matrix s;
    Matrix ds;
    eval_score_rows(model, y, a, s, ds);
    z = (y + eta * sigma2 * s) * inv.asDiagonal();
    const Eigen::RowVectorXd inv2 = inv.cwiseProduct(inv);
    z2 = z.cwiseProduct(z) + (eta * sigma2 * sigma2) * ds * inv2.asDiagonal();
    z2.rowwise() += eta * sigma2 * inv2;
  }
  z2 = z2.cwiseMax(clamp_eps);
}

}  // namespace

Matrix tweedie_mean(const Matrix& y, std::span<const int> a, const ScoreModel& model,
                    const Vector& d, double sigma2, double eta) {
  if (y.cols() != d.size()) throw ConfigError("tweedie_mean: dimension mismatch");
  check_d(d);
  if (eta == 0.0) return y * d.cwiseInverse().asDiagonal();
  Matrix s;
  Matrix ds;
  eval_score_rows(model, y, a, s, ds);
  return (y + eta * sigma2 * s) * d.cwiseInverse().asDiagonal();
}

Matrix tweedie_second_moment(const Matrix& z, const Matrix& y, std::span<const int> a,
                             const ScoreModel& model, const Vector& d, double sigma2,
                             double clamp_eps, double eta) {
  if (y.cols() != d.size() || z.rows() != y.rows() || z.cols() != y.cols())
    throw ConfigError("tweedie_second_moment: dimension mismatch");
  check_d(d);
  const Eigen::RowVectorXd inv2 = d.cwiseInverse().cwiseAbs2().transpose();
  Matrix z2 = z.cwiseProduct(z);
  if (eta != 0.0) {
    z2.rowwise() += eta * sigma2 * inv2;
    Matrix s;
    Matrix ds;
    eval_score_rows(model, y, a, s, ds);
    z2 += (eta * sigma2 * sigma2) * ds * inv2.asDiagonal();
  }
  return z2.cwiseMax(clamp_eps);
}

MStepStats m_step_stats(const std::vector<Matrix>& x, const std::vector<Matrix>& z,
                        const std::vector<Matrix>& z2) {
  if (x.empty() || x.size() != z.size() || x.size() != z2.size())
    throw ConfigError("M-step: per-domain inputs disagree in length");
  MStepStats st;
  st.M = Matrix::Zero(x.front().cols(), z.front().cols());
  st.S = Vector::Zero(z.front().cols());
  for (std::size_t e = 0; e < x.size(); ++e) {
    if (x[e].rows() != z[e].rows() || z[e].rows() != z2[e].rows() || z[e].cols() != st.S.size() ||
        z2[e].cols() != st.S.size() || x[e].cols() != st.M.rows())
      throw ConfigError("M-step: dimension mismatch in domain " + std::to_string(e + 1));
    st.M.noalias() += x[e].transpose() * z[e];
    st.S += z2[e].colwise().sum().transpose();
    st.x_sq += x[e].squaredNorm();
    st.n += static_cast<long>(x[e].rows());
  }
  return st;
}

double m_step_objective(const Matrix& o, const Vector& d, const MStepStats& st) {
  const Vector c = (o.transpose() * st.M).diagonal();
  return (d.array().square() * st.S.array()).sum() - 2.0 * d.dot(c);
}

MStepResult m_step_A(const MStepStats& st, int sweeps) {
  if (st.M.rows() < st.M.cols()) throw ConfigError("M-step: d_X must be >= d_Z");
  for (Eigen::Index j = 0; j < st.S.size(); ++j)
    if (!(st.S(j) > 0.0))
      throw NumericError("M-step: second-moment column " + std::to_string(j + 1) + " sums to zero");
  if (!st.M.allFinite()) throw NumericError("M-step: non-finite cross moment");

  MStepResult r;
  r.O = polar_factor(st.M);
  r.D = (r.O.transpose() * st.M).diagonal().cwiseQuotient(st.S);
  r.objective = m_step_objective(r.O, r.D, st);
  for (int it = 0; it < sweeps; ++it) {
    const Matrix o = polar_factor(st.M * r.D.asDiagonal());
    const Vector d = (o.transpose() * st.M).diagonal().cwiseQuotient(st.S);
    const double f = m_step_objective(o, d, st);
    if (!(f < r.objective)) break;
    const double gain = r.objective - f;
    r.O = o;
    r.D = d;
    r.objective = f;
    if (gain <= 1e-14 * (1.0 + std::abs(f))) break;
  }
  // Canonical representative: columns ordered as returned, signs with D >= 0.
  for (Eigen::Index j = 0; j < r.D.size(); ++j) {
    if (r.D(j) < 0.0) {
      r.D(j) = -r.D(j);
      r.O.col(j) *= -1.0;
    }
  }
  return r;
}

MStepResult m_step_A(const std::vector<Matrix>& x, const std::vector<Matrix>& z,
                     const std::vector<Matrix>& z2, int sweeps) {
  return m_step_A(m_step_stats(x, z, z2), sweeps);
}

double m_step_sigma2(const MStepStats& st, const Matrix& a, const Vector& d, double floor) {
  const double num = (d.array().square() * st.S.array()).sum() - 2.0 * (a.transpose() * st.M).trace() + st.x_sq;
  const double s2 = num / (static_cast<double>(st.M.rows()) * static_cast<double>(st.n));
  if (std::isnan(s2)) return s2;
  return std::max(s2, floor);
}

double m_step_sigma2(const std::vector<Matrix>& x, const Matrix& a, const Vector& d,
                     const std::vector<Matrix>& z, const std::vector<Matrix>& z2, double floor) {
  return m_step_sigma2(m_step_stats(x, z, z2), a, d, floor);
}

namespace {

Matrix stack_rows(const std::vector<Matrix>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  Matrix out(n, blocks.front().cols());
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

bool finite_moments(const std::vector<Matrix>& z, const std::vector<Matrix>& z2) {
  for (std::size_t e = 0; e < z.size(); ++e)
    if (!z[e].allFinite() || !z2[e].allFinite()) return false;
  return true;
}

}  // namespace

EmResult run_em(const Dataset& data, const EmConfig& config) {
  validate_em_config(config);
  validate_dataset(data);
  const int dz = data.d_z();
  const Dag dag = apply_variant(data.dag, config.graph_variant);
  std::vector<ArmMask> targets = data.targets();
  if (config.graph_variant.kind == GraphVariant::Kind::Pooled)
    for (auto& t : targets) std::fill(t.begin(), t.end(), 0);
  const std::vector<double> weights = data.weights();

  EmResult res;
  if (config.oracle) {
    if (!data.true_a || !data.true_sigma2) throw ConfigError("oracle mode needs the true A and sigma2");
    res.estimate = estimate_from_a(*data.true_a, std::max(*data.true_sigma2, config.sigma2_floor));
  } else if (config.init == InitKind::Provided) {
    if (config.init_a->rows() != data.d_x() || config.init_a->cols() != dz)
      throw ConfigError("initial mixing matrix has the wrong shape");
    res.estimate = estimate_from_a(*config.init_a, 1.0);
    res.estimate.sigma2 = config.init_sigma2 ? *config.init_sigma2
                                             : pca_residual_variance(stack_rows(data.x), dz);
  } else {
    const Matrix pooled = stack_rows(data.x);
    res.estimate.O = pca_loadings(pooled, dz);
    res.estimate.D = Vector::Ones(dz);
    res.estimate.sigma2 = config.init_sigma2 ? *config.init_sigma2 : pca_residual_variance(pooled, dz);
  }
  res.estimate.sigma2 = std::max(res.estimate.sigma2, config.sigma2_floor);

  // A zero-score model stands in when shrinkage is off.
  ScoreModel model = make_zero_score(dag, config.spline, config.lambda);
  const std::size_t n_dom = data.x.size();
  std::vector<Matrix> y(n_dom);
  res.z_hat.assign(n_dom, Matrix());
  res.z2_hat.assign(n_dom, Matrix());
  double prev_sigma2 = res.estimate.sigma2;
  double prev_obj = 0.0;

  for (int t = 1; t <= config.iterations; ++t) {
    auto& est = res.estimate;
    for (std::size_t e = 0; e < n_dom; ++e) y[e] = project(est.O, data.x[e]);

    double score_loss = 0.0;
    if (config.eta != 0.0) {
      model = fit_score(y, targets, weights, dag, config.spline, config.lambda);
      for (const auto& l : model.train_loss) score_loss += l[0] + l[1];
    }

    for (std::size_t e = 0; e < n_dom; ++e)
      e_step(y[e], targets[e], model, est.D, est.sigma2, config.eta, config.clamp_z2_eps, res.z_hat[e],
             res.z2_hat[e]);
    if (!finite_moments(res.z_hat, res.z2_hat)) throw NonFiniteError("non-finite latent moments", t);

    const MStepStats st = m_step_stats(data.x, res.z_hat, res.z2_hat);
    TraceRow row;
    row.iteration = t;
    row.score_loss = score_loss;
    if (config.oracle) {
      row.m_objective = m_step_objective(est.O, est.D, st);
    } else {
      const MStepResult m = m_step_A(st, config.m_step_sweeps);
      est.O = m.O;
      est.D = m.D;
      est.sigma2 = m_step_sigma2(st, est.A(), est.D, config.sigma2_floor);
      row.m_objective = m.objective;
      if (!est.O.allFinite() || !est.D.allFinite() || !std::isfinite(est.sigma2))
        throw NonFiniteError("non-finite measurement estimate", t);
      if ((est.D.array() <= 0.0).any()) throw NonFiniteError("M-step produced a zero scale", t);
    }
    row.sigma2 = est.sigma2;
    res.trace.push_back(row);
    res.iterations_run = t;

    if (config.early_stop && t > 1 && !config.oracle) {
      const double ds = std::abs(est.sigma2 - prev_sigma2) / std::max(std::abs(prev_sigma2), 1e-300);
      const double dobj = std::abs(row.m_objective - prev_obj) / std::max(std::abs(prev_obj), 1e-300);
      if (ds < config.early_stop_tol && dobj < config.early_stop_tol) break;
    }
    prev_sigma2 = est.sigma2;
    prev_obj = row.m_objective;
  }
  return res;
}

BaselineKind parse_method(const std::string& name) {
  if (name == "true-dag") return BaselineKind::TrueDag;
  if (name == "no-shrinkage") return BaselineKind::NoShrinkage;
  if (name == "empty") return BaselineKind::EmptyGraph;
  if (name == "complete") return BaselineKind::CompleteDag;
  if (name == "pooled") return BaselineKind::Pooled;
  if (name == "pca") return BaselineKind::Pca;
  throw ConfigError("unknown method '" + name +
                    "' (expected true-dag, empty, complete, pooled, no-shrinkage or pca)");
}

std::string method_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::TrueDag: return "true-dag";
    case BaselineKind::NoShrinkage: return "no-shrinkage";
    case BaselineKind::EmptyGraph: return "empty";
    case BaselineKind::CompleteDag: return "complete";
    case BaselineKind::Pooled: return "pooled";
    case BaselineKind::Pca: return "pca";
  }
  return "unknown";
}

EmConfig make_baseline(const EmConfig& base, BaselineKind kind) {
  EmConfig c = base;
  switch (kind) {
    case BaselineKind::TrueDag: c.graph_variant = GraphVariant::true_dag(); break;
    case BaselineKind::NoShrinkage: c.eta = 0.0; break;
    case BaselineKind::EmptyGraph: c.graph_variant = GraphVariant::empty(); break;
    case BaselineKind::CompleteDag:
      if (c.graph_variant.kind != GraphVariant::Kind::CompleteFromOrder) c.graph_variant = GraphVariant::complete();
      break;
    case BaselineKind::Pooled: c.graph_variant = GraphVariant::pooled(); break;
    case BaselineKind::Pca: throw ConfigError("the PCA baseline has no EM configuration");
  }
  return c;
}

EmResult run_pca(const Dataset& data) {
  validate_dataset(data);
  const int dz = data.d_z();
  const Matrix pooled = stack_rows(data.x);
  EmResult res;
  res.estimate.O = pca_loadings(pooled, dz);
  res.estimate.D = Vector::Ones(dz);
  res.estimate.sigma2 = std::max(pca_residual_variance(pooled, dz), 1e-8);
  for (const auto& x : data.x) {
    Matrix z = project(res.estimate.O, x);
    Matrix z2 = z.cwiseProduct(z).array() + res.estimate.sigma2;
    res.z_hat.push_back(std::move(z));
    res.z2_hat.push_back(std::move(z2));
  }
  return res;
}

EmResult run_method(const Dataset& data, const EmConfig& base, BaselineKind kind) {
  if (kind == BaselineKind::Pca) return run_pca(data);
  return run_em(data, make_baseline(base, kind));
}

}  // namespace ebcrl
