#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "pbound/drift_builder.h"
#include "pbound/map_model.h"
#include "pbound/service_law.h"

namespace pbound {

/// Workload process driven by a MAP (C, D) with i.i.d. service times.
/// Arrivals are admitted only if the workload stays at or below `capacity`.
/// The atom is the state (0, i0).
struct SimModel {
  Matrix c;
  Matrix d;
  ServiceLaw law;
  double capacity = std::numeric_limits<double>::infinity();
  int i0 = 0;
  /// Paths longer than this raise ExplodedCycle.
  double cycle_cap = 1e6;

  int phases() const { return static_cast<int>(c.rows()); }

  static SimModel from_map(const MarkovArrivalProcess& map, const ServiceLaw& law, int i0);
  static SimModel mg1(double lambda, const ServiceLaw& law,
                      double capacity = std::numeric_limits<double>::infinity());
};

struct WorkloadState {
  double w = 0.0;
  int phase = 0;
};

/// Reward g integrated along the path: a rate while idle at w = 0 and the
/// integral over each linear decay stretch.
struct RewardFunction {
  /// g(0, phase).
  std::function<double(int)> at_zero;
  /// int_lo^hi g(y, phase) dy for 0 <= lo < hi.
  std::function<double(double, double, int)> decay_integral;

  static RewardFunction constant(double c);
  /// g(w, i) = c u_i e^{theta w}, integrated in closed form.
  static RewardFunction exponential(double c, double theta, Vector u);
  /// g = f of the certificate, integrated in closed form.
  static RewardFunction certificate_f(const DriftCertificate& cert);
  /// Indicator of w = 0 and phase in `phases` (all phases when empty).
  static RewardFunction zero_indicator(std::vector<int> phases = {});
  /// g restricted to workloads in (lo, hi].
  static RewardFunction restricted(RewardFunction g, double lo, double hi);
  /// Arbitrary g, integrated by adaptive quadrature on each stretch.
  static RewardFunction custom(std::function<double(double, int)> g);
};

struct CycleRecord {
  double tau = 0.0;
  /// Integral of the first reward, then one entry per reward.
  double g_integral = 0.0;
  std::vector<double> integrals;
  /// Time spent at w = 0 (the small set {0} x phases).
  double occupation_c = 0.0;
  std::uint64_t arrivals = 0;
  /// tau <= probe time, when a probe was requested.
  bool hit_alpha_by_t = false;
};

/// Runs from `start` until the first entry into the atom from outside it.
/// A start inside the atom first waits for the exit, so the record covers a
/// full regeneration cycle.
CycleRecord simulate_cycle(const SimModel& model, WorkloadState start,
                           std::span<const RewardFunction> rewards, RandomStream& stream,
                           double probe_t = std::numeric_limits<double>::infinity());

/// State at time t from `start`, without stopping at the atom.
WorkloadState simulate_until(const SimModel& model, WorkloadState start, double t,
                             RandomStream& stream);

struct RegenerativeEstimate {
  double point = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
};

/// sum g_integral / sum tau over cycles from the atom, with the delta-method
/// standard error. Replication r uses RandomStream::derived(seed, r).
RegenerativeEstimate estimate_pi_g(const SimModel& model, const RewardFunction& g,
                                   std::uint64_t n_cycles, std::uint64_t seed);

/// Mean of int_0^tau g - pi_g tau over paths from `start` to the atom. The
/// standard error combines the path variance with pi_g's uncertainty. Zero
/// with zero error when the start lies in the atom.
RegenerativeEstimate estimate_h(const SimModel& model, const RewardFunction& g,
                                WorkloadState start, std::uint64_t n_reps,
                                const RegenerativeEstimate& pi_g, std::uint64_t seed);

/// As estimate_h, but a start in the atom runs a full return cycle instead
/// of returning zero, so the atom value is a genuine estimate.
RegenerativeEstimate estimate_h_return_form(const SimModel& model, const RewardFunction& g,
                                            WorkloadState start, std::uint64_t n_reps,
                                            const RegenerativeEstimate& pi_g,
                                            std::uint64_t seed);

/// Fraction of paths from (0, phase) that sit in the atom at time t.
RegenerativeEstimate estimate_return_probability(const SimModel& model, int phase, double t,
                                                 std::uint64_t n, std::uint64_t seed);

/// Mean time spent at w = 0 before the return to the atom.
RegenerativeEstimate estimate_occupation(const SimModel& model, WorkloadState start,
                                         std::uint64_t n, std::uint64_t seed);

/// Long-run arrival rate (admitted or not) from regeneration cycles.
RegenerativeEstimate estimate_arrival_rate(const SimModel& model, std::uint64_t n_cycles,
                                           std::uint64_t seed);

/// Stationary g-weighted mass of the atom {w = 0} and of the bins
/// (edges[k], edges[k+1]], from one set of regeneration cycles.
class StationaryHistogram {
 public:
  StationaryHistogram(std::vector<double> edges, std::vector<std::vector<double>> per_cycle,
                      std::vector<double> taus, std::uint64_t seed);

  /// Cell 0 is the atom {0}; cell k >= 1 is bin k - 1.
  int cells() const { return static_cast<int>(per_cycle_.front().size()); }
  const std::vector<double>& edges() const { return edges_; }
  RegenerativeEstimate cell(int k) const;
  /// Ratio estimate of sum_k coeffs[k] mass_k with its delta-method error.
  RegenerativeEstimate combination(const std::vector<double>& coeffs) const;

 private:
  std::vector<double> edges_;
  std::vector<std::vector<double>> per_cycle_;
  std::vector<double> taus_;
  std::uint64_t seed_;
};

StationaryHistogram estimate_stationary_histogram(const SimModel& model,
                                                  const RewardFunction& g,
                                                  std::vector<double> edges,
                                                  std::uint64_t n_cycles,
                                                  std::uint64_t seed);

}  // namespace pbound
