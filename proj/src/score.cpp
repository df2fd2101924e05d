#include "ebcrl/score.hpp"

#include <cmath>
#include <string>

#include "ebcrl/errors.hpp"

namespace ebcrl {

namespace {

std::vector<int> node_inputs(const Dag& dag, int j) {
  std::vector<int> in{j};
  const auto& pa = dag.parents(j);
  in.insert(in.end(), pa.begin(), pa.end());
  return in;
}

TensorBasis node_basis(const Dag& dag, int j, const SplineConfig& spline) {
  const SplineBasis1D b(spline.n_basis, spline.lo, spline.hi);
  return TensorBasis(static_cast<int>(dag.parents(j).size()) + 1, b, spline.max_features);
}

void check_inputs(const std::vector<Matrix>& y, const std::vector<ArmMask>& targets,
                  const std::vector<double>& weights, int d) {
  if (y.size() != targets.size() || y.size() != weights.size())
    throw ConfigError("score fit: per-domain inputs disagree in length");
  for (std::size_t e = 0; e < y.size(); ++e) {
    if (y[e].cols() != d)
      throw ConfigError("score fit: domain " + std::to_string(e + 1) + " has " +
                        std::to_string(y[e].cols()) + " latent columns, expected " +
                        std::to_string(d));
    if (targets[e].size() != static_cast<std::size_t>(d))
      throw ConfigError("score fit: target vector of domain " + std::to_string(e + 1) +
                        " has the wrong length");
    for (int a : targets[e])
      if (a != 0 && a != 1) throw ConfigError("score fit: targets must be 0 or 1");
    if (!y[e].allFinite()) throw NumericError("score fit: non-finite latent input");
  }
}

// Rows of one (node, arm) design, stored densely by non-zero slot.
struct Design {
  int n_rows = 0;
  int nnz = 0;  // non-zeros per row
  std::vector<double> omega;
  std::vector<int> index;
  std::vector<double> value;
  std::vector<double> dself;
  std::vector<SplineBasis1D::Local> locals;  // n_rows x n_coords
};

Design build_design(const TensorBasis& basis, const std::vector<int>& inputs,
                    const std::vector<Matrix>& y, const std::vector<ArmMask>& targets,
                    const std::vector<double>& omega, int j, int arm) {
  Design d;
  const int nc = basis.n_coords();
  d.nnz = 1;
  for (int c = 0; c < nc; ++c) d.nnz *= 4;
  SparseFeatures f;
  std::vector<double> x(static_cast<std::size_t>(nc));
  for (std::size_t e = 0; e < y.size(); ++e) {
    if (targets[e][static_cast<std::size_t>(j)] != arm) continue;
    for (Eigen::Index i = 0; i < y[e].rows(); ++i) {
      for (int c = 0; c < nc; ++c) {
        x[static_cast<std::size_t>(c)] = y[e](i, inputs[static_cast<std::size_t>(c)]);
        d.locals.push_back(basis.coord(c).local(x[static_cast<std::size_t>(c)]));
      }
      basis.local_features(x, f);
      d.index.insert(d.index.end(), f.index.begin(), f.index.end());
      d.value.insert(d.value.end(), f.value.begin(), f.value.end());
      d.dself.insert(d.dself.end(), f.dself.begin(), f.dself.end());
      d.omega.push_back(omega[e]);
      ++d.n_rows;
    }
  }
  return d;
}

// Overlap of two cubic B-spline local windows: sum_b B_b(t) B_b(t').
double local_kernel(const SplineBasis1D::Local& p, const SplineBasis1D::Local& q) {
  const int off = q.first - p.first;
  if (off >= 4 || off <= -4) return 0.0;
  double s = 0.0;
  for (int k = std::max(0, off); k <= std::min(3, 3 + off); ++k)
    s += p.value[static_cast<std::size_t>(k)] * q.value[static_cast<std::size_t>(k - off)];
  return s;
}

Vector solve_primal(const Design& d, const Vector& c, const std::vector<int>& active,
                    const std::vector<int>& compact, double lambda) {
  const auto na = static_cast<Eigen::Index>(active.size());
  Matrix g = Matrix::Zero(na, na);
  for (int r = 0; r < d.n_rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(d.nnz);
    const double w = d.omega[static_cast<std::size_t>(r)];
    for (int p = 0; p < d.nnz; ++p) {
      const double vp = w * d.value[base + static_cast<std::size_t>(p)];
      if (vp == 0.0) continue;
      const int ip = compact[static_cast<std::size_t>(d.index[base + static_cast<std::size_t>(p)])];
      for (int q = 0; q < d.nnz; ++q) {
        const int iq = compact[static_cast<std::size_t>(d.index[base + static_cast<std::size_t>(q)])];
        g(ip, iq) += vp * d.value[base + static_cast<std::size_t>(q)];
      }
    }
  }
  Vector cc(na);
  for (Eigen::Index k = 0; k < na; ++k) cc(k) = c(active[static_cast<std::size_t>(k)]);
  const Vector sol = ridge_solve(g, cc, lambda);
  Vector theta = Vector::Zero(c.size());
  for (Eigen::Index k = 0; k < na; ++k) theta(active[static_cast<std::size_t>(k)]) = -sol(k);
  return theta;
}

// Woodbury form for wide designs: with B = W^1/2 Phi,
// theta = -(c - Bᵀ (B Bᵀ + lambda I)^-1 B c) / lambda. The tensor-product
// kernel B Bᵀ factorizes into per-coordinate spline overlaps.
Vector solve_dual(const Design& d, const Vector& c, int n_coords, double lambda) {
  const int n = d.n_rows;
  std::vector<double> sw(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) sw[static_cast<std::size_t>(r)] = std::sqrt(d.omega[static_cast<std::size_t>(r)]);
  Matrix k(n, n);
  for (int r = 0; r < n; ++r) {
    const auto* lr = &d.locals[static_cast<std::size_t>(r) * static_cast<std::size_t>(n_coords)];
    for (int s = 0; s <= r; ++s) {
      const auto* ls = &d.locals[static_cast<std::size_t>(s) * static_cast<std::size_t>(n_coords)];
      double v = sw[static_cast<std::size_t>(r)] * sw[static_cast<std::size_t>(s)];
      for (int cc = 0; cc < n_coords && v != 0.0; ++cc) v *= local_kernel(lr[cc], ls[cc]);
      k(r, s) = v;
      k(s, r) = v;
    }
  }
  Vector bc(n);
  for (int r = 0; r < n; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(d.nnz);
    double acc = 0.0;
    for (int p = 0; p < d.nnz; ++p)
      acc += d.value[base + static_cast<std::size_t>(p)] * c(d.index[base + static_cast<std::size_t>(p)]);
    bc(r) = sw[static_cast<std::size_t>(r)] * acc;
  }
  const Vector alpha = ridge_solve(k, bc, lambda);
  Vector theta = c;
  for (int r = 0; r < n; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(d.nnz);
    const double a = sw[static_cast<std::size_t>(r)] * alpha(r);
    for (int p = 0; p < d.nnz; ++p)
      theta(d.index[base + static_cast<std::size_t>(p)]) -= a * d.value[base + static_cast<std::size_t>(p)];
  }
  theta *= -1.0 / lambda;
  return theta;
}

double design_loss(const Design& d, const Vector& theta) {
  double loss = 0.0;
  for (int r = 0; r < d.n_rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(d.nnz);
    double s = 0.0;
    double ds = 0.0;
    for (int p = 0; p < d.nnz; ++p) {
      const double t = theta(d.index[base + static_cast<std::size_t>(p)]);
      s += d.value[base + static_cast<std::size_t>(p)] * t;
      ds += d.dself[base + static_cast<std::size_t>(p)] * t;
    }
    loss += d.omega[static_cast<std::size_t>(r)] * (ds + 0.5 * s * s);
  }
  return loss;
}

}  // namespace

void ScoreModel::evaluate(std::span<const double> y, std::span<const int> a, double* s,
                          double* ds, SparseFeatures& ws) const {
  const int d = n_nodes();
  if (y.size() != static_cast<std::size_t>(d) || a.size() != static_cast<std::size_t>(d))
    throw ConfigError("score evaluation: input has the wrong dimension");
  std::vector<double> x;
  for (int j = 0; j < d; ++j) {
    const auto& pa = dag.parents(j);
    x.assign(1, y[static_cast<std::size_t>(j)]);
    for (int k : pa) x.push_back(y[static_cast<std::size_t>(k)]);
    const Vector& th = theta[static_cast<std::size_t>(j)][a[static_cast<std::size_t>(j)] != 0 ? 1 : 0];
    bases[static_cast<std::size_t>(j)].local_features(x, ws);
    double sv = 0.0;
    double dv = 0.0;
    for (std::size_t e = 0; e < ws.index.size(); ++e) {
      const double t = th(ws.index[e]);
      sv += ws.value[e] * t;
      dv += ws.dself[e] * t;
    }
    if (s) s[j] = sv;
    if (ds) ds[j] = dv;
  }
}

ScoreModel make_zero_score(const Dag& dag, const SplineConfig& spline, double lambda) {
  ScoreModel m;
  m.dag = dag;
  m.spline = spline;
  m.lambda = lambda;
  for (int j = 0; j < dag.n_nodes(); ++j) {
    m.bases.push_back(node_basis(dag, j, spline));
    const int nf = m.bases.back().n_features();
    m.theta.push_back({Vector::Zero(nf), Vector::Zero(nf)});
    m.train_loss.push_back({0.0, 0.0});
  }
  return m;
}

std::vector<double> sample_weights(const std::vector<Matrix>& y, const std::vector<double>& weights) {
  if (y.size() != weights.size()) throw ConfigError("one weight per domain is required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("domain weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("domain weights sum to zero");
  std::vector<double> omega(y.size(), 0.0);
  for (std::size_t e = 0; e < y.size(); ++e)
    if (y[e].rows() > 0) omega[e] = weights[e] / (static_cast<double>(y[e].rows()) * total);
  return omega;
}

ScoreModel fit_score(const std::vector<Matrix>& y, const std::vector<ArmMask>& targets,
                     const std::vector<double>& weights, const Dag& dag,
                     const SplineConfig& spline, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("ridge lambda must be > 0");
  const int dz = dag.n_nodes();
  check_inputs(y, targets, weights, dz);
  const std::vector<double> omega = sample_weights(y, weights);
  ScoreModel model = make_zero_score(dag, spline, lambda);

  for (int j = 0; j < dz; ++j) {
    const TensorBasis& basis = model.bases[static_cast<std::size_t>(j)];
    const std::vector<int> inputs = node_inputs(dag, j);
    const int m = basis.n_features();
    for (int arm = 0; arm < 2; ++arm) {
      const Design d = build_design(basis, inputs, y, targets, omega, j, arm);
      if (d.n_rows == 0) continue;  // no data: theta stays 0

      Vector c = Vector::Zero(m);
      std::vector<int> compact(static_cast<std::size_t>(m), -1);
      std::vector<int> active;
      for (int r = 0; r < d.n_rows; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(d.nnz);
        for (int p = 0; p < d.nnz; ++p) {
          const int idx = d.index[base + static_cast<std::size_t>(p)];
          c(idx) += d.omega[static_cast<std::size_t>(r)] * d.dself[base + static_cast<std::size_t>(p)];
          if (compact[static_cast<std::size_t>(idx)] < 0) {
            compact[static_cast<std::size_t>(idx)] = static_cast<int>(active.size());
            active.push_back(idx);
          }
        }
      }

      Vector theta = static_cast<int>(active.size()) <= d.n_rows
                         ? solve_primal(d, c, active, compact, lambda)
                         : solve_dual(d, c, basis.n_coords(), lambda);
      if (!theta.allFinite())
        throw NumericError("score fit: non-finite coefficients for node " + std::to_string(j + 1));
      model.train_loss[static_cast<std::size_t>(j)][static_cast<std::size_t>(arm)] = design_loss(d, theta);
      model.theta[static_cast<std::size_t>(j)][static_cast<std::size_t>(arm)] = std::move(theta);
    }
  }
  return model;
}

Vector eval_score(const ScoreModel& model, std::span<const double> y, std::span<const int> a) {
  Vector s(model.n_nodes());
  SparseFeatures ws;
  model.evaluate(y, a, s.data(), nullptr, ws);
  return s;
}

Vector eval_score_dself(const ScoreModel& model, std::span<const double> y,
                        std::span<const int> a) {
  Vector ds(model.n_nodes());
  SparseFeatures ws;
  model.evaluate(y, a, nullptr, ds.data(), ws);
  return ds;
}

void eval_score_rows(const ScoreModel& model, const Matrix& y, std::span<const int> a,
                     Matrix& s, Matrix& ds) {
  const int d = model.n_nodes();
  s.resize(y.rows(), d);
  ds.resize(y.rows(), d);
  SparseFeatures ws;
  std::vector<double> row(static_cast<std::size_t>(d));
  std::vector<double> sv(static_cast<std::size_t>(d));
  std::vector<double> dv(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (int j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = y(i, j);
    model.evaluate(row, a, sv.data(), dv.data(), ws);
    for (int j = 0; j < d; ++j) {
      s(i, j) = sv[static_cast<std::size_t>(j)];
      ds(i, j) = dv[static_cast<std::size_t>(j)];
    }
  }
}

double empirical_loss(const ScoreModel& model, const std::vector<Matrix>& y,
                      const std::vector<ArmMask>& targets, const std::vector<double>& weights) {
  check_inputs(y, targets, weights, model.n_nodes());
  const std::vector<double> omega = sample_weights(y, weights);
  double loss = 0.0;
  Matrix s;
  Matrix ds;
  for (std::size_t e = 0; e < y.size(); ++e) {
    eval_score_rows(model, y[e], targets[e], s, ds);
    loss += omega[e] * (ds.sum() + 0.5 * s.squaredNorm());
  }
  return loss;
}

double regularized_objective(const ScoreModel& model, const std::vector<Matrix>& y,
                             const std::vector<ArmMask>& targets,
                             const std::vector<double>& weights) {
  double reg = 0.0;
  for (const auto& th : model.theta) reg += th[0].squaredNorm() + th[1].squaredNorm();
  return empirical_loss(model, y, targets, weights) + 0.5 * model.lambda * reg;
}

nlohmann::json score_to_json(const ScoreModel& model) {
  nlohmann::json j;
  j["n_basis"] = model.spline.n_basis;
  j["knot_range"] = {model.spline.lo, model.spline.hi};
  j["knots"] = SplineBasis1D(model.spline.n_basis, model.spline.lo, model.spline.hi).knots();
  j["lambda"] = model.lambda;
  j["n_nodes"] = model.n_nodes();
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [k, t] : model.dag.edges()) edges.push_back({k + 1, t + 1});
  j["edges"] = edges;
  nlohmann::json nodes = nlohmann::json::array();
  for (int n = 0; n < model.n_nodes(); ++n) {
    const auto& th = model.theta[static_cast<std::size_t>(n)];
    nodes.push_back({{"node", n + 1},
                     {"parents", [&] {
                        std::vector<int> p = model.dag.parents(n);
                        for (int& v : p) ++v;
                        return p;
                      }()},
                     {"theta0", std::vector<double>(th[0].data(), th[0].data() + th[0].size())},
                     {"theta1", std::vector<double>(th[1].data(), th[1].data() + th[1].size())}});
  }
  j["nodes"] = nodes;
  return j;
}

ScoreModel score_from_json(const nlohmann::json& j) {
  try {
    SplineConfig spline;
    spline.n_basis = j.at("n_basis").get<int>();
    spline.lo = j.at("knot_range").at(0).get<double>();
    spline.hi = j.at("knot_range").at(1).get<double>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>() - 1, e.at(1).get<int>() - 1);
    const Dag dag = build_dag(j.at("n_nodes").get<int>(), edges);
    ScoreModel model = make_zero_score(dag, spline, j.at("lambda").get<double>());
    const auto& nodes = j.at("nodes");
    if (nodes.size() != static_cast<std::size_t>(dag.n_nodes()))
      throw ConfigError("score model: node count mismatch");
    for (int n = 0; n < dag.n_nodes(); ++n) {
      for (int arm = 0; arm < 2; ++arm) {
        const auto v = nodes.at(static_cast<std::size_t>(n)).at(arm == 0 ? "theta0" : "theta1").get<std::vector<double>>();
        auto& th = model.theta[static_cast<std::size_t>(n)][static_cast<std::size_t>(arm)];
        if (static_cast<Eigen::Index>(v.size()) != th.size())
          throw ConfigError("score model: coefficient length mismatch for node " + std::to_string(n + 1));
        th = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("score model JSON: ") + e.what());
  }
}

}  // namespace ebcrl
