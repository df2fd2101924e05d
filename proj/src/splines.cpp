#include "ebcrl/splines.hpp"

#include <algorithm>
#include <string>

#include "ebcrl/errors.hpp"

namespace ebcrl {

SplineBasis1D::SplineBasis1D(int n_basis, double lo, double hi) : n_basis_(n_basis) {
  if (n_basis < kOrder)
    throw ConfigError("a cubic B-spline basis needs at least 4 functions");
  if (!(lo < hi)) throw ConfigError("knot range must satisfy lo < hi");
  const int n_breaks = n_basis - 2;
  breakpoints_.resize(static_cast<std::size_t>(n_breaks));
  for (int i = 0; i < n_breaks; ++i)
    breakpoints_[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n_breaks - 1);
  breakpoints_.back() = hi;
  knots_.assign(kOrder - 1, lo);
  knots_.insert(knots_.end(), breakpoints_.begin(), breakpoints_.end());
  knots_.insert(knots_.end(), kOrder - 1, hi);
}

SplineBasis1D::Local SplineBasis1D::local(double t) const {
  constexpr int p = kOrder - 1;
  const bool outside = t < lo() || t > hi();
  t = std::clamp(t, lo(), hi());
  const auto& u = knots_;

  // Span s with u[s] <= t < u[s+1], s in [p, n_basis - 1].
  int s = n_basis_ - 1;
  if (t < hi()) {
    const auto it = std::upper_bound(u.begin() + p, u.begin() + n_basis_ + 1, t);
    s = static_cast<int>(it - u.begin()) - 1;
  }

  // Cox-de Boor triangle; keep the degree-2 row for the derivative.
  std::array<double, kOrder> n{};
  std::array<double, kOrder> n2{};
  std::array<double, kOrder> left{};
  std::array<double, kOrder> right{};
  n[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    if (j == p) n2 = n;
    left[static_cast<std::size_t>(j)] = t - u[static_cast<std::size_t>(s + 1 - j)];
    right[static_cast<std::size_t>(j)] = u[static_cast<std::size_t>(s + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = n[static_cast<std::size_t>(r)] / denom;
      n[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    n[static_cast<std::size_t>(j)] = saved;
  }

  Local out;
  out.first = s - p;
  for (int k = 0; k < kOrder; ++k) out.value[static_cast<std::size_t>(k)] = n[static_cast<std::size_t>(k)];
  if (!outside) {
    // N'_{i,3} = 3 (N_{i,2} / (u[i+3]-u[i]) - N_{i+1,2} / (u[i+4]-u[i+1])),
    // with n2[r] = N_{s-2+r,2}.
    for (int k = 0; k < kOrder; ++k) {
      const int i = s - p + k;
      double term = 0.0;
      if (k >= 1) {
        const double d = u[static_cast<std::size_t>(i + 3)] - u[static_cast<std::size_t>(i)];
        if (d > 0.0) term += n2[static_cast<std::size_t>(k - 1)] / d;
      }
      if (k <= 2) {
        const double d = u[static_cast<std::size_t>(i + 4)] - u[static_cast<std::size_t>(i + 1)];
        if (d > 0.0) term -= n2[static_cast<std::size_t>(k)] / d;
      }
      out.deriv[static_cast<std::size_t>(k)] = p * term;
    }
  }
  return out;
}

Vector SplineBasis1D::eval(double t) const {
  Vector v = Vector::Zero(n_basis_);
  const Local l = local(t);
  for (int k = 0; k < kOrder; ++k) v(l.first + k) = l.value[static_cast<std::size_t>(k)];
  return v;
}

Vector SplineBasis1D::eval_derivative(double t) const {
  Vector v = Vector::Zero(n_basis_);
  const Local l = local(t);
  for (int k = 0; k < kOrder; ++k) v(l.first + k) = l.deriv[static_cast<std::size_t>(k)];
  return v;
}

Vector eval_1d(const SplineBasis1D& basis, double t) { return basis.eval(t); }

TensorBasis::TensorBasis(std::vector<SplineBasis1D> coords, long max_features)
    : coords_(std::move(coords)) {
  if (coords_.empty()) throw ConfigError("tensor basis needs at least one coordinate");
  long m = 1;
  for (const auto& c : coords_) {
    m *= c.n_basis();
    if (m > max_features)
      throw ConfigError("tensor basis with " + std::to_string(coords_.size()) +
                        " coordinates exceeds the feature cap of " +
                        std::to_string(max_features));
  }
  n_features_ = static_cast<int>(m);
}

TensorBasis::TensorBasis(int n_coords, const SplineBasis1D& basis, long max_features)
    : TensorBasis(std::vector<SplineBasis1D>(static_cast<std::size_t>(std::max(n_coords, 0)), basis),
                  max_features) {}

void TensorBasis::local_features(std::span<const double> x, SparseFeatures& out) const {
  if (x.size() != coords_.size())
    throw ConfigError("feature input has " + std::to_string(x.size()) + " coordinates, expected " +
                      std::to_string(coords_.size()));
  out.index.assign(1, 0);
  out.value.assign(1, 1.0);
  out.dself.assign(1, 1.0);
  for (std::size_t c = 0; c < coords_.size(); ++c) {
    const auto& basis = coords_[c];
    const auto l = basis.local(x[c]);
    const std::size_t prev = out.index.size();
    std::vector<int> index(prev * 4);
    std::vector<double> value(prev * 4);
    std::vector<double> dself(prev * 4);
    for (std::size_t e = 0; e < prev; ++e) {
      for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t o = e * 4 + k;
        index[o] = out.index[e] * basis.n_basis() + l.first + static_cast<int>(k);
        value[o] = out.value[e] * l.value[k];
        dself[o] = out.dself[e] * (c == 0 ? l.deriv[k] : l.value[k]);
      }
    }
    out.index = std::move(index);
    out.value = std::move(value);
    out.dself = std::move(dself);
  }
}

Vector eval_features(const TensorBasis& basis, std::span<const double> x) {
  SparseFeatures f;
  basis.local_features(x, f);
  Vector v = Vector::Zero(basis.n_features());
  for (std::size_t e = 0; e < f.index.size(); ++e) v(f.index[e]) += f.value[e];
  return v;
}

Vector eval_features_dself(const TensorBasis& basis, std::span<const double> x) {
  SparseFeatures f;
  basis.local_features(x, f);
  Vector v = Vector::Zero(basis.n_features());
  for (std::size_t e = 0; e < f.index.size(); ++e) v(f.index[e]) += f.dself[e];
  return v;
}

}  // namespace ebcrl
