#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pbound/drift_builder.h"

namespace pbound {

struct MapGi1Formula {
  double t0;
  double x0;
};
/// Limit T -> 0 of T / xi_T, available when C(i, i0) > 0 for every i != i0.
struct SpecialCaseLimit {
  double min_rate;
};
struct UserSupplied {};

using WitnessProvenance = std::variant<MapGi1Formula, SpecialCaseLimit, UserSupplied>;

/// Lower bound xi on the probability of sitting in the atom T time units
/// after starting anywhere in the small set.
struct ReturnWitness {
  double t = 0.0;
  double xi = 1.0;
  /// T / xi, stored directly so the special-case limit needs no (T, xi).
  double ratio = 0.0;
  int i0 = 0;
  WitnessProvenance provenance = UserSupplied{};
  /// Model the witness was computed for; empty for user-supplied witnesses.
  std::string model_key;

  std::string provenance_name() const;
};

/// Validates 0 < xi <= 1 and T > 0.
ReturnWitness user_witness(double t, double xi, int i0 = 0);

/// T = t0 + M x0 and
/// xi = H(x0)^M min_i [exp(C t0) (D exp(C x0))^M](i, i0),
/// accumulated with a running log scale so small entries do not underflow.
ReturnWitness map_gi1_witness(const MarkovArrivalProcess& map, const ServiceLaw& law,
                              int i0, double t0, double x0,
                              const Tolerances& tol = kDefaultTolerances);

/// Ratio 1 / min_{i != i0} C(i, i0); zero when there is a single phase.
ReturnWitness map_gi1_witness_special(const MarkovArrivalProcess& map, int i0);

/// Smallest T / xi over the grid t0s x x0s. Points whose witness is
/// degenerate are skipped; ties keep the lexicographically smallest (t0, x0).
ReturnWitness optimize_witness(const MarkovArrivalProcess& map, const ServiceLaw& law,
                               int i0, std::vector<double> t0s, std::vector<double> x0s,
                               const Tolerances& tol = kDefaultTolerances);

enum class BoundKind { kGeneral, kAtom };

struct BoundReport {
  DriftCertificate cert;
  std::optional<ReturnWitness> witness;
  BoundKind kind = BoundKind::kGeneral;
  /// Value used for |<pi, g>|.
  double pi_g_abs = 0.0;
  double prefactor = 1.0;
  /// b T / xi; zero for the atom bound.
  double additive = 0.0;
};

/// |h(x)| <= (1 + pi_g_abs / f_inf) (V0(x) + b T / xi) for every |g| <= f.
/// pi_g_abs defaults to b pi(C) and is capped there.
BoundReport general_bound(const DriftCertificate& cert, const ReturnWitness& w,
                          std::optional<double> pi_g_abs = std::nullopt);

/// Same with pi(C) = 1, which needs no knowledge of the stationary law.
BoundReport weaker_bound(const DriftCertificate& cert, const ReturnWitness& w);

/// |h(x)| <= (1 + b pi_alpha / f_inf) V0(x), for certificates whose small
/// set is the atom. pi_alpha defaults to the certificate's pi(C).
BoundReport atom_bound(const DriftCertificate& cert,
                       std::optional<double> pi_alpha = std::nullopt);

/// Bound on |h(x, phase)| for all |g| <= c f.
double evaluate_bound(const BoundReport& report, double x, int phase = 0, double c = 1.0);

}  // namespace pbound
