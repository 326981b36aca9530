#pragma once

#include <functional>

namespace pbound {

struct QuadOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_intervals = 2000;
};

struct QuadResult {
  double value = 0.0;
  /// Sum of Gauss/Kronrod differences over the final partition.
  double error = 0.0;
  int evaluations = 0;
  /// False when the interval budget ran out before the tolerance was met, or
  /// the integrand produced a non-finite value.
  bool converged = true;
};

using Integrand = std::function<double(double)>;

/// Adaptive 15-point Gauss-Kronrod on [a, b]: the interval with the largest
/// error estimate is bisected until the total estimate drops below
/// max(abs_tol, rel_tol * |value|).
QuadResult integrate(const Integrand& f, double a, double b,
                     const QuadOptions& opts = {});

/// Integral over [a, inf) through the substitution y = a + t / (1 - t).
QuadResult integrate_to_infinity(const Integrand& f, double a,
                                 const QuadOptions& opts = {});

}  // namespace pbound
