#pragma once

#include <iosfwd>
#include <vector>

#include "pbound/drift_builder.h"
#include "pbound/service_law.h"

namespace pbound {

/// M/GI/1 queue whose arrivals are admitted only while the workload stays
/// at or below the capacity. The capacity may be +inf.
struct WclModel {
  double lambda;
  ServiceLaw law;
  double capacity;

  double rho() const { return lambda * law.mean(); }
};

struct InnerIntegral {
  double value = 0.0;
  double error = 0.0;
};

/// int_{L-x}^inf H(dy) (V0(x + y) + V0(x)), rewritten by parts as
///   (V0(L) + V0(x)) H-bar(L - x) + int_{L-x}^inf H-bar(y) V'(x + y) dy.
InnerIntegral inner_tail_integral(const ServiceLaw& law, const DriftCertificate& cert,
                                  double x, double capacity, double tol);

struct DistanceTerm {
  int m = 0;
  /// (1 - rho) rho^m int_0^L H_re^{*m}(dx) phi(x), before the outer factor.
  double value = 0.0;
};

struct DistanceBound {
  double value = 0.0;
  int m_used = 0;
  double truncation_error = 0.0;
  double quadrature_error = 0.0;
  /// lambda (1 + b (1 - rho) / f_inf).
  double prefactor = 0.0;
  /// Inner integral at x = L, which dominates it on [0, L].
  double sup_term = 0.0;
  int cells = 0;
  std::vector<DistanceTerm> terms;

  /// CSV with header m,term.
  void write_terms_csv(std::ostream& out) const;
};

/// Upper bound on the f-weighted distance between the stationary laws with
/// and without the capacity limit. The series is cut at the first m whose
/// geometric remainder is at most tol / 2, and the outer grid is refined
/// until successive resolutions differ by at most tol / 2. The reported
/// value adds both error terms to the refined sum.
DistanceBound wcl_distance_bound(const WclModel& model, const DriftCertificate& cert,
                                 double tol, int initial_cells = 1000,
                                 int max_cells = 32000);

}  // namespace pbound
