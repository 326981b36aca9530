#pragma once

#include <Eigen/Dense>

namespace pbound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws InvalidShape unless `m` is square, nonempty and finite.
void require_square_finite(const Matrix& m, const char* what);

/// exp(A t) by uniformization,
///   sum_l e^{-zeta t} (zeta t)^l / l! (I + A / zeta)^l,  zeta = max_i |A_ii|.
///
/// A must have nonnegative off-diagonal entries and nonpositive diagonal
/// entries (a generator or subgenerator). The series is cut once the
/// discarded Poisson mass is at most `tol`, so for a (sub)generator every
/// entry of the result is within `tol` of the exact value. When every
/// diagonal entry is zero but A is not, the plain Taylor series is summed
/// instead.
Matrix matrix_exponential(const Matrix& a, double t, double tol = 1e-15);

struct PerronPair {
  double eigenvalue = 0.0;
  /// Strictly positive, largest entry exactly 1.
  Vector eigenvector;
  /// ||B u - eigenvalue u||_inf evaluated after the final renormalization.
  double residual = 0.0;
  int iterations = 0;
};

/// Perron-Frobenius eigenpair of a nonnegative irreducible matrix by power
/// iteration from the all-ones vector. Iterates on B + I, which has the same
/// eigenvector and is primitive, so periodic matrices converge too.
PerronPair perron_eigenpair(const Matrix& b, double tol = 1e-12,
                            int max_iter = 1000000);

}  // namespace pbound
