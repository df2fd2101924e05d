#include "ebcrl/numeric.hpp"

#include <string>

#include "ebcrl/errors.hpp"

namespace ebcrl {

bool all_finite(const Matrix& m) { return m.allFinite(); }

double orthonormality_error(const Matrix& o) {
  const Matrix gram = o.transpose() * o;
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

ThinSvd thin_svd(const Matrix& m) {
  if (m.rows() < m.cols())
    throw ConfigError("thin_svd expects rows >= cols, got " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()));
  if (!m.allFinite()) throw NumericError("thin_svd: non-finite input");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Matrix polar_factor(const Matrix& m) {
  const ThinSvd svd = thin_svd(m);
  return svd.U * svd.V.transpose();
}

Vector ridge_solve(const Matrix& g, const Vector& b, double lambda) {
  if (g.rows() != g.cols() || g.rows() != b.size())
    throw ConfigError("ridge_solve: dimension mismatch");
  if (lambda < 0.0) throw ConfigError("ridge_solve: lambda must be >= 0");
  Matrix shifted = g;
  shifted.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw NumericError("ridge_solve: matrix is not positive definite");
  Vector x = llt.solve(b);
  if (!x.allFinite()) throw NumericError("ridge_solve: non-finite solution");
  return x;
}

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> centered_covariance_eigen(const Matrix& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean;
  const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows());
  return Eigen::SelfAdjointEigenSolver<Matrix>(cov);
}

}  // namespace

Matrix pca_loadings(const Matrix& x, int d_z) {
  if (d_z < 1 || d_z > std::min(x.rows(), x.cols()))
    throw ConfigError("pca_loadings: d_z must lie in 1..min(N, d_X)");
  if (!x.allFinite()) throw NumericError("pca_loadings: non-finite input");
  const auto eig = centered_covariance_eigen(x);
  // Eigenvalues ascend; take the last d_z columns in descending order.
  const Eigen::Index d = x.cols();
  Matrix loadings(d, d_z);
  for (int j = 0; j < d_z; ++j) {
    Vector v = eig.eigenvectors().col(d - 1 - j);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    loadings.col(j) = v;
  }
  return loadings;
}

double pca_residual_variance(const Matrix& x, int d_z) {
  if (x.cols() <= d_z) return 1.0;
  const auto eig = centered_covariance_eigen(x);
  const Eigen::Index tail = x.cols() - d_z;
  return eig.eigenvalues().head(tail).mean();
}

}  // namespace ebcrl
