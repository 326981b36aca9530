#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

#include "pbound/dense_kernel.h"
#include "pbound/error.h"

namespace pbound {
namespace {

Matrix random_generator(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(0.0, scale);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      a(i, j) = u(rng);
      row += a(i, j);
    }
    a(i, i) = -row;
  }
  return a;
}

TEST(MatrixExponential, ScalarMatchesExp) {
  Matrix a(1, 1);
  a(0, 0) = -2.5;
  EXPECT_NEAR(matrix_exponential(a, 0.7)(0, 0), std::exp(-1.75), 1e-15);
}

TEST(MatrixExponential, ZeroTimeIsIdentity) {
  std::mt19937_64 rng(1);
  const Matrix a = random_generator(rng, 4, 3.0);
  EXPECT_TRUE(matrix_exponential(a, 0.0).isApprox(Matrix::Identity(4, 4)));
}

TEST(MatrixExponential, TwoStateClosedForm) {
  // Generator [[-a, a], [b, -b]]: P_00(t) = b/(a+b) + a/(a+b) e^{-(a+b)t}.
  const double a = 1.3, b = 0.4, t = 2.1;
  Matrix q(2, 2);
  q << -a, a, b, -b;
  const Matrix p = matrix_exponential(q, t);
  EXPECT_NEAR(p(0, 0), b / (a + b) + a / (a + b) * std::exp(-(a + b) * t), 1e-14);
  EXPECT_NEAR(p(1, 1), a / (a + b) + b / (a + b) * std::exp(-(a + b) * t), 1e-14);
}

TEST(MatrixExponential, HundredRandomGeneratorsAgreeWithPade) {
  std::mt19937_64 rng(20261014);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_real_distribution<double> time(0.01, 5.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = random_generator(rng, size(rng), 4.0);
    const double t = time(rng);
    const Matrix oracle = (a * t).exp();
    worst = std::max(worst, (matrix_exponential(a, t) - oracle).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(MatrixExponential, SubgeneratorRowsStaySubstochastic) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix a = random_generator(rng, 3, 2.0);
    a(trial % 3, trial % 3) -= 1.0;  // leak mass from one row
    const Matrix p = matrix_exponential(a, 1.5);
    EXPECT_GE(p.minCoeff(), -1e-15);
    EXPECT_LE(p.rowwise().sum().maxCoeff(), 1.0 + 1e-12);
  }
}

TEST(MatrixExponential, RejectsPositiveDiagonal) {
  Matrix a(2, 2);
  a << 0.5, 0.0, 1.0, -1.0;
  try {
    matrix_exponential(a, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPositiveDiagonal);
  }
}

TEST(Perron, TwoByTwoClosedForm) {
  Matrix b(2, 2);
  b << 2.0, 1.0, 3.0, 0.5;
  const double tr = 2.5, det = 1.0 - 3.0;
  const double expected = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
  const PerronPair p = perron_eigenpair(b);
  EXPECT_NEAR(p.eigenvalue, expected, 1e-11);
  EXPECT_DOUBLE_EQ(p.eigenvector.maxCoeff(), 1.0);
  EXPECT_GT(p.eigenvector.minCoeff(), 0.0);
  EXPECT_LE(p.residual, 1e-10);
}

TEST(Perron, PeriodicMatrixConverges) {
  Matrix b(2, 2);
  b << 0.0, 2.0, 2.0, 0.0;
  const PerronPair p = perron_eigenpair(b);
  EXPECT_NEAR(p.eigenvalue, 2.0, 1e-11);
}

TEST(Perron, RandomPositiveMatricesHaveSmallResidual) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 5;
    Matrix b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(i, j) = u(rng);
    const PerronPair p = perron_eigenpair(b);
    EXPECT_LE((b * p.eigenvector - p.eigenvalue * p.eigenvector).lpNorm<Eigen::Infinity>(),
              1e-10);
    const Eigen::VectorXcd ev = b.cast<std::complex<double>>().eigenvalues();
    double rho = 0.0;
    for (Eigen::Index k = 0; k < ev.size(); ++k) rho = std::max(rho, std::abs(ev(k)));
    EXPECT_NEAR(p.eigenvalue, rho, 1e-9 * std::max(1.0, rho));
  }
}

TEST(Perron, RejectsNegativeEntries) {
  Matrix b(2, 2);
  b << 1.0, -0.1, 0.2, 1.0;
  try {
    perron_eigenpair(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotNonnegative);
  }
}

}  // namespace
}  // namespace pbound
