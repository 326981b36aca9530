#include "pbound/dense_kernel.h"

#include <cmath>
#include <limits>
#include <string>

#include "pbound/error.h"

namespace pbound {

namespace {

constexpr long kMaxUniformizationTerms = 1000000;

}  // namespace

void require_square_finite(const Matrix& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw Error(ErrorCode::kInvalidShape,
                std::string(what) + " must be a nonempty square matrix");
  }
  if (!m.allFinite()) {
    throw Error(ErrorCode::kInvalidShape,
                std::string(what) + " has non-finite entries");
  }
}

Matrix matrix_exponential(const Matrix& a, double t, double tol) {
  require_square_finite(a, "matrix_exponential argument");
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw Error(ErrorCode::kInvalidArgument, "time must be finite and >= 0");
  }
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");
  }
  const Eigen::Index n = a.rows();
  double zeta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a(i, i) > 0.0) {
      throw Error(ErrorCode::kPositiveDiagonal,
                  "diagonal entry " + std::to_string(i) + " is positive");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && a(i, j) < 0.0) {
        throw Error(ErrorCode::kInvalidShape,
                    "off-diagonal entries must be nonnegative");
      }
    }
    zeta = std::max(zeta, std::abs(a(i, i)));
  }
  const Matrix identity = Matrix::Identity(n, n);
  if (t == 0.0 || a.isZero(0.0)) return identity;

  if (zeta == 0.0) {
    // Nonnegative matrix with zero diagonal: Taylor series, all terms >= 0.
    Matrix result = identity;
    Matrix term = identity;
    for (long l = 1; l < kMaxUniformizationTerms; ++l) {
      term = term * a * (t / static_cast<double>(l));
      result += term;
      if (term.lpNorm<Eigen::Infinity>() <= tol * result.lpNorm<Eigen::Infinity>()) {
        return result;
      }
    }
    throw Error(ErrorCode::kNotConverged, "Taylor series did not converge");
  }

  const Matrix p = identity + a / zeta;
  const double rate = zeta * t;
  const double log_rate = std::log(rate);
  Matrix power = identity;
  Matrix result = Matrix::Zero(n, n);
  double cumulative = 0.0;
  for (long l = 0; l < kMaxUniformizationTerms; ++l) {
    const double dl = static_cast<double>(l);
    const double weight =
        std::exp(-rate + dl * log_rate - std::lgamma(dl + 1.0));
    result += weight * power;
    cumulative += weight;
    if (cumulative >= 1.0 - tol) return result;
    // Past the mode the remaining Poisson mass is dominated by a geometric
    // series with ratio rate / (l + 2).
    if (dl + 2.0 > rate) {
      const double next = weight * rate / (dl + 1.0);
      const double tail = next / (1.0 - rate / (dl + 2.0));
      if (tail <= tol) return result;
    }
    power = power * p;
  }
  throw Error(ErrorCode::kNotConverged,
              "uniformization exceeded the term cap");
}

PerronPair perron_eigenpair(const Matrix& b, double tol, int max_iter) {
  require_square_finite(b, "Perron matrix");
  if ((b.array() < 0.0).any()) {
    throw Error(ErrorCode::kNotNonnegative, "matrix has negative entries");
  }
  const Eigen::Index n = b.rows();
  const Matrix shifted = b + Matrix::Identity(n, n);

  Vector u = Vector::Ones(n);
  PerronPair out;
  for (int iter = 1; iter <= max_iter; ++iter) {
    Vector next = shifted * u;
    const double scale = next.maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw Error(ErrorCode::kNotConverged, "power iteration degenerated");
    }
    next /= scale;
    // Collatz-Wielandt bracket on the current iterate.
    const Vector image = b * next;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ratio = image(i) / next(i);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    u = next;
    if ((next.array() > 0.0).all()) {
      const double sigma = 0.5 * (lo + hi);
      const double residual = (image - sigma * next).lpNorm<Eigen::Infinity>();
      if (residual <= tol) {
        out.eigenvalue = sigma;
        out.iterations = iter;
        break;
      }
    }
    if (iter == max_iter) {
      throw Error(ErrorCode::kNotConverged,
                  "power iteration did not reach the residual tolerance");
    }
  }
  // Max entry exactly 1, then recheck the residual on the stored vector.
  Eigen::Index arg = 0;
  u.maxCoeff(&arg);
  u /= u(arg);
  u(arg) = 1.0;
  out.eigenvector = u;
  out.residual = (b * u - out.eigenvalue * u).lpNorm<Eigen::Infinity>();
  if (out.residual > tol) {
    throw Error(ErrorCode::kNotConverged,
                "residual exceeds tolerance after renormalization");
  }
  return out;
}

}  // namespace pbound
