#include "pbound/map_model.h"

#include <cmath>
#include <string>
#include <vector>

#include "pbound/error.h"

namespace pbound {

namespace {

std::vector<bool> reachable(const Matrix& m, bool transpose) {
  const Eigen::Index n = m.rows();
  std::vector<bool> seen(n, false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = transpose ? m(j, i) : m(i, j);
      if (j != i && w > 0.0 && !seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

}  // namespace

bool is_irreducible(const Matrix& m) {
  if (m.rows() <= 1) return true;
  for (bool transpose : {false, true}) {
    for (bool r : reachable(m, transpose)) {
      if (!r) return false;
    }
  }
  return true;
}

MarkovArrivalProcess MarkovArrivalProcess::poisson(double rate) {
  Matrix c(1, 1), d(1, 1);
  c(0, 0) = -rate;
  d(0, 0) = rate;
  return validate_map(c, d);
}

MarkovArrivalProcess validate_map(const Matrix& c, const Matrix& d,
                                  const Tolerances& tol) {
  require_square_finite(c, "C");
  require_square_finite(d, "D");
  if (c.rows() != d.rows()) {
    throw Error(ErrorCode::kInvalidShape, "C and D differ in dimension");
  }
  const Eigen::Index n = c.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && c(i, j) < 0.0) {
        throw Error(ErrorCode::kNegativeRate,
                    "C(" + std::to_string(i) + "," + std::to_string(j) +
                        ") is negative");
      }
      if (d(i, j) < 0.0) {
        throw Error(ErrorCode::kNegativeRate,
                    "D(" + std::to_string(i) + "," + std::to_string(j) +
                        ") is negative");
      }
    }
  }
  const Matrix gen = c + d;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row = gen.row(i).sum();
    if (std::abs(row) > tol.structural) {
      throw Error(ErrorCode::kNonGeneratorRows,
                  "row " + std::to_string(i) + " of C + D sums to " +
                      std::to_string(row));
    }
  }
  if (!(d.array() > 0.0).any()) {
    throw Error(ErrorCode::kNoArrivals, "D has no positive entry");
  }
  if (!is_irreducible(gen)) {
    throw Error(ErrorCode::kReducible, "C + D is not irreducible");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    // Implied by the checks above; kept as an explicit guard.
    if (!(c(i, i) < 0.0)) {
      throw Error(ErrorCode::kNonGeneratorRows,
                  "C(" + std::to_string(i) + "," + std::to_string(i) +
                      ") must be negative");
    }
  }
  return MarkovArrivalProcess(c, d);
}

PhaseStationary stationary_phase(const MarkovArrivalProcess& map,
                                 const Tolerances& tol) {
  const Matrix gen = map.generator();
  const Eigen::Index n = gen.rows();
  // varpi (C + D) = 0 and varpi e = 1, written as an (n+1) x n system.
  Matrix system(n + 1, n);
  system.topRows(n) = gen.transpose();
  system.row(n).setOnes();
  Vector rhs = Vector::Zero(n + 1);
  rhs(n) = 1.0;
  const auto qr = system.colPivHouseholderQr();
  if (qr.rank() < n) {
    throw Error(ErrorCode::kSingularSystem, "stationary system is singular");
  }
  Vector varpi = qr.solve(rhs);
  // Rounding can leave tiny negative entries.
  varpi = varpi.cwiseMax(0.0);
  varpi /= varpi.sum();
  const double residual =
      (varpi.transpose() * gen).lpNorm<Eigen::Infinity>();
  if (residual > tol.residual) {
    throw Error(ErrorCode::kSingularSystem,
                "stationary residual " + std::to_string(residual));
  }
  PhaseStationary out;
  out.lambda = varpi.dot(map.d() * Vector::Ones(n));
  out.varpi = std::move(varpi);
  return out;
}

}  // namespace pbound
