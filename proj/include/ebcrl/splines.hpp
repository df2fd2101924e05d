#pragma once

#include <array>
#include <span>
#include <vector>

#include "ebcrl/numeric.hpp"

namespace ebcrl {

/// Clamped uniform cubic B-spline basis on [lo, hi] with `n_basis` functions.
///
/// The breakpoints are n_basis - 2 equally spaced points from lo to hi; the
/// full knot vector repeats each boundary four times. Inputs outside [lo, hi]
/// are clamped to the boundary (constant extension, zero derivative).
class SplineBasis1D {
 public:
  static constexpr int kOrder = 4;

  SplineBasis1D(int n_basis, double lo, double hi);

  int n_basis() const noexcept { return n_basis_; }
  double lo() const noexcept { return breakpoints_.front(); }
  double hi() const noexcept { return breakpoints_.back(); }
  /// Strictly increasing breakpoints (boundary padding excluded).
  const std::vector<double>& knots() const noexcept { return breakpoints_; }
  /// Full knot vector with boundary repetition, length n_basis + 4.
  const std::vector<double>& full_knots() const noexcept { return knots_; }

  /// The (at most) four non-zero basis functions at t.
  struct Local {
    int first = 0;  // index of the first of the four functions
    std::array<double, 4> value{};
    std::array<double, 4> deriv{};
  };
  Local local(double t) const;

  Vector eval(double t) const;
  Vector eval_derivative(double t) const;

 private:
  int n_basis_;
  std::vector<double> breakpoints_;
  std::vector<double> knots_;
};

Vector eval_1d(const SplineBasis1D& basis, double t);

/// Non-zero entries of a tensor-product feature vector and of its derivative
/// with respect to the first coordinate. Both share the same index set.
struct SparseFeatures {
  std::vector<int> index;
  std::vector<double> value;
  std::vector<double> dself;
};

/// Tensor product of per-coordinate bases for inputs (y_j, y_pa(j)...).
/// Features are ordered as the Kronecker product with the first coordinate
/// most significant.
class TensorBasis {
 public:
  static constexpr long kDefaultMaxFeatures = 32768;

  /// Throws ConfigError when the feature count exceeds `max_features`.
  TensorBasis(std::vector<SplineBasis1D> coords, long max_features = kDefaultMaxFeatures);
  TensorBasis(int n_coords, const SplineBasis1D& basis,
              long max_features = kDefaultMaxFeatures);

  int n_coords() const noexcept { return static_cast<int>(coords_.size()); }
  int n_features() const noexcept { return n_features_; }
  const SplineBasis1D& coord(int c) const { return coords_.at(static_cast<std::size_t>(c)); }

  void local_features(std::span<const double> x, SparseFeatures& out) const;

 private:
  std::vector<SplineBasis1D> coords_;
  int n_features_ = 1;
};

Vector eval_features(const TensorBasis& basis, std::span<const double> x);
Vector eval_features_dself(const TensorBasis& basis, std::span<const double> x);

}  // namespace ebcrl
