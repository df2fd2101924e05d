#pragma once

#include <Eigen/Dense>

namespace ebcrl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thin SVD M = U diag(S) Vᵀ with S non-negative and descending.
struct ThinSvd {
  Matrix U;  // rows(M) x cols(M)
  Vector S;
  Matrix V;  // cols(M) x cols(M)
};

/// Requires rows >= cols and finite entries (ConfigError / NumericError).
ThinSvd thin_svd(const Matrix& m);

/// Orthonormal polar factor U Vᵀ of a tall matrix: the maximizer of
/// tr(Oᵀ M) over column-orthonormal O.
Matrix polar_factor(const Matrix& m);

/// Solves (G + lambda I) x = b with a Cholesky factorization of the
/// symmetric positive (semi)definite G. Throws NumericError when the
/// shifted matrix is not positive definite.
Vector ridge_solve(const Matrix& g, const Vector& b, double lambda);

/// Top-`d_z` principal directions of the column-centered data matrix
/// (rows are samples). Columns are orthonormal, each flipped so its
/// largest-magnitude entry is positive.
Matrix pca_loadings(const Matrix& x, int d_z);

/// Trailing-eigenvalue noise estimate that pairs with pca_loadings: the mean
/// of the d_X - d_Z smallest eigenvalues of the centered sample covariance.
double pca_residual_variance(const Matrix& x, int d_z);

bool all_finite(const Matrix& m);

/// max |(Oᵀ O - I)_ij|.
double orthonormality_error(const Matrix& o);

}  // namespace ebcrl
