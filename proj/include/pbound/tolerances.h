#pragma once

namespace pbound {

/// Numerical tolerances shared across modules.
struct Tolerances {
  /// Row sums of C + D and similar exact structural identities.
  double structural = 1e-12;
  /// Residual for linear solves such as the stationary phase vector.
  double residual = 1e-10;
  /// Perron eigen-residual ||B u - sigma u||_inf.
  double perron = 1e-12;
  int perron_max_iter = 1000000;
  /// Poisson tail mass discarded by uniformization.
  double expm = 1e-15;
  /// Relative slack for the grid check of the drift inequality.
  double generator_check = 1e-6;
  /// Certificates with inf f below this are rejected as degenerate.
  double f_inf_floor = 1e-10;
  /// Adaptive quadrature targets.
  double quad_abs = 1e-12;
  double quad_rel = 1e-10;
};

inline constexpr Tolerances kDefaultTolerances{};

}  // namespace pbound
