#include <gtest/gtest.h>

#include <random>

#include "ebcrl/errors.hpp"
#include "ebcrl/numeric.hpp"

using namespace ebcrl;

namespace {

Matrix random_matrix(int r, int c, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(gen);
  return m;
}

}  // namespace

TEST(Numeric, SvdUnitColumn) {
  Matrix m(2, 1);
  m << 1, 0;
  const ThinSvd s = thin_svd(m);
  EXPECT_NEAR(std::abs(s.U(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(s.S(0), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(s.V(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(s.U(0, 0) * s.V(0, 0), 1.0, 1e-14);
}

TEST(Numeric, SvdRankOne) {
  Matrix m(2, 1);
  m << 3, 4;
  ThinSvd s = thin_svd(m);
  // fix the joint sign so U has a positive first entry
  if (s.U(0, 0) < 0) {
    s.U *= -1;
    s.V *= -1;
  }
  EXPECT_NEAR(s.U(0, 0), 0.6, 1e-12);
  EXPECT_NEAR(s.U(1, 0), 0.8, 1e-12);
  EXPECT_NEAR(s.S(0), 5.0, 1e-12);
  EXPECT_NEAR(s.V(0, 0), 1.0, 1e-12);
}

TEST(Numeric, SvdReconstruction) {
  const Matrix m = random_matrix(10, 3, 1);
  const ThinSvd s = thin_svd(m);
  EXPECT_LT((s.U * s.S.asDiagonal() * s.V.transpose() - m).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_GE(s.S(0), s.S(1));
  EXPECT_GE(s.S(1), s.S(2));
  EXPECT_GE(s.S(2), 0.0);
}

TEST(Numeric, SvdRejectsWideAndNonFinite) {
  EXPECT_THROW(thin_svd(random_matrix(2, 3, 2)), ConfigError);
  Matrix m = random_matrix(3, 2, 3);
  m(0, 0) = std::nan("");
  EXPECT_THROW(thin_svd(m), NumericError);
}

TEST(Numeric, PolarFactorMaximizesTrace) {
  const Matrix m = random_matrix(8, 3, 4);
  const Matrix o = polar_factor(m);
  EXPECT_LT(orthonormality_error(o), 1e-12);
  const double best = (o.transpose() * m).trace();
  for (unsigned s = 0; s < 50; ++s) {
    const Matrix q = Eigen::HouseholderQR<Matrix>(random_matrix(8, 3, 100 + s)).householderQ() *
                     Matrix::Identity(8, 3);
    EXPECT_LE((q.transpose() * m).trace(), best + 1e-12);
  }
}

TEST(Numeric, RidgeDiagonal) {
  Vector b(2);
  b << 2, 4;
  const Vector x = ridge_solve(Matrix::Identity(2, 2), b, 1.0);
  EXPECT_NEAR(x(0), 1.0, 1e-14);
  EXPECT_NEAR(x(1), 2.0, 1e-14);
}

TEST(Numeric, RidgeZeroGram) {
  Vector b(1);
  b << 1;
  EXPECT_NEAR(ridge_solve(Matrix::Zero(1, 1), b, 0.5)(0), 2.0, 1e-14);
}

TEST(Numeric, RidgeResidual) {
  const Matrix r = random_matrix(6, 6, 5);
  const Matrix g = r.transpose() * r;
  const Vector b = random_matrix(6, 1, 6);
  const Vector x = ridge_solve(g, b, 0.1);
  EXPECT_LT(((g + 0.1 * Matrix::Identity(6, 6)) * x - b).norm(), 1e-10);
}

TEST(Numeric, RidgeSingular) {
  Vector b(2);
  b << 1, 1;
  EXPECT_THROW(ridge_solve(Matrix::Zero(2, 2), b, 0.0), NumericError);
}

TEST(Numeric, PcaSingleDirection) {
  Matrix x(4, 3);
  x << 1, 0, 0, -1, 0, 0, 1, 0, 0, -1, 0, 0;
  const Matrix l = pca_loadings(x, 1);
  EXPECT_NEAR(l(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(l(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(l(2, 0), 0.0, 1e-12);
}

TEST(Numeric, PcaRecoversSubspace) {
  const Matrix a = Eigen::HouseholderQR<Matrix>(random_matrix(12, 3, 7)).householderQ() * Matrix::Identity(12, 3);
  Matrix z = random_matrix(500, 3, 8);
  z.col(0) *= 3.0;
  z.col(1) *= 2.0;
  const Matrix x = z * a.transpose();
  const Matrix l = pca_loadings(x, 3);
  // cosines of the principal angles are the singular values of Lᵀ A
  const Eigen::JacobiSVD<Matrix> svd(l.transpose() * a);
  EXPECT_GT(svd.singularValues().minCoeff(), 1.0 - 1e-6);
  EXPECT_LT(orthonormality_error(l), 1e-10);
}

TEST(Numeric, PcaResidualVariance) {
  Matrix x = random_matrix(20000, 5, 9);
  x.col(0) *= 4.0;
  const double v = pca_residual_variance(x, 1);
  EXPECT_NEAR(v, 1.0, 0.05);
}

TEST(Numeric, Orthonormality) {
  EXPECT_DOUBLE_EQ(orthonormality_error(Matrix::Identity(4, 2)), 0.0);
  EXPECT_TRUE(all_finite(Matrix::Zero(2, 2)));
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = INFINITY;
  EXPECT_FALSE(all_finite(m));
}
