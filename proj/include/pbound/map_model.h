#pragma once

#include "pbound/dense_kernel.h"
#include "pbound/tolerances.h"

namespace pbound {

/// Markovian arrival process (C, D) on phases {0, ..., M-1}.
///
/// C holds the phase-change rates without an arrival (negative diagonal),
/// D the rates of transitions accompanied by one arrival. Instances are only
/// produced by validate_map and are immutable afterwards.
class MarkovArrivalProcess {
 public:
  const Matrix& c() const { return c_; }
  const Matrix& d() const { return d_; }
  int phases() const { return static_cast<int>(c_.rows()); }

  /// Generator C + D of the phase process.
  Matrix generator() const { return c_ + d_; }

  /// Single-phase MAP with C = [[-rate]], D = [[rate]].
  static MarkovArrivalProcess poisson(double rate);

 private:
  friend MarkovArrivalProcess validate_map(const Matrix&, const Matrix&,
                                           const Tolerances&);
  MarkovArrivalProcess(Matrix c, Matrix d) : c_(std::move(c)), d_(std::move(d)) {}

  Matrix c_;
  Matrix d_;
};

/// Checks the MAP invariants and throws the matching error on the first
/// violation: NegativeRate (negative off-diagonal of C or entry of D),
/// NonGeneratorRows (a row of C + D does not sum to zero), NoArrivals (D is
/// zero), Reducible (the phase graph of C + D is not strongly connected).
MarkovArrivalProcess validate_map(const Matrix& c, const Matrix& d,
                                  const Tolerances& tol = kDefaultTolerances);

struct PhaseStationary {
  Vector varpi;
  /// Arrival rate varpi D e.
  double lambda = 0.0;
};

/// Stationary vector of C + D from a direct solve with the normalization
/// equation appended.
PhaseStationary stationary_phase(const MarkovArrivalProcess& map,
                                 const Tolerances& tol = kDefaultTolerances);

/// Strong connectivity of the digraph with an edge i -> j whenever
/// m(i, j) > 0 and i != j.
bool is_irreducible(const Matrix& m);

}  // namespace pbound
