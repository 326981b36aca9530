#pragma once

#include <string>
#include <variant>
#include <vector>

#include "pbound/map_model.h"
#include "pbound/service_law.h"
#include "pbound/tolerances.h"

namespace pbound {

/// V(x, i) = e^{theta x} u_i with u the Perron vector of C + H^(theta) D.
struct MapGi1Exp {
  double theta;
  double sigma;
  Vector u;
};
/// V(x) = e^{theta x}, sigma = -lambda + lambda H^(theta).
struct Mg1Light {
  double theta;
  double sigma;
};
/// V(x) = exp(epsilon (x + x0)^beta). `sufficient` is the value of the
/// x-uniform feasibility integral, which must not exceed rho_tilde.
struct Mg1Moderate {
  double epsilon;
  double beta;
  double x0;
  double rho_tilde;
  double sufficient;
};
/// V(x) = (x + x0)^kappa_tilde.
struct Mg1Polynomial {
  double kappa_tilde;
  double x0;
  double rho_tilde;
  double sufficient;
};

using DriftRegime = std::variant<MapGi1Exp, Mg1Light, Mg1Moderate, Mg1Polynomial>;

/// A checked instance of A V <= -f + b 1_C for one queue model.
///
/// The small set C is {0} x phases and the atom is (0, i0); for the
/// single-server M/GI/1 models both reduce to {0}. All evaluators include
/// the scale factor, so `scaled(c)` certifies the drift for c V, c f, c b.
struct DriftCertificate {
  MarkovArrivalProcess map;
  ServiceLaw law;
  DriftRegime regime;
  double lambda = 0.0;
  double rho = 0.0;
  /// Stationary mass of the small set, 1 - rho for both queue families.
  double pi_small_set = 0.0;
  double b = 0.0;
  double f_inf = 0.0;
  int i0 = 0;
  double scale = 1.0;

  int phases() const { return map.phases(); }
  bool small_set_is_atom() const { return phases() == 1; }
  bool in_small_set(double x, int /*phase*/) const { return x <= 0.0; }
  bool in_atom(double x, int phase) const { return x <= 0.0 && phase == i0; }

  double v(double x, int phase = 0) const;
  /// V - inf over the atom, so v0 vanishes on the atom.
  double v0(double x, int phase = 0) const;
  /// Derivative of V in the workload coordinate.
  double dv(double x, int phase = 0) const;
  double f(double x, int phase = 0) const;
  /// Integral of f(., phase) over [lo, hi], in closed form.
  double f_integral(double lo, double hi, int phase = 0) const;

  /// Prefactor 1 + b pi(C) / f_inf of the bounds built from this certificate.
  double prefactor() const { return 1.0 + b * pi_small_set / f_inf; }

  DriftCertificate scaled(double c) const;
  std::string regime_name() const;
  /// Identifies the model (C, D and service law) the certificate belongs to.
  std::string model_key() const;
};

std::string model_key(const MarkovArrivalProcess& map, const ServiceLaw& law);

/// Throws Unstable unless lambda * mean < 1; returns rho.
double check_stability(double lambda, const ServiceLaw& law);

/// Maximal real eigenvalue sigma(theta) of C + H^(theta) D and its Perron
/// vector with largest entry 1.
struct SigmaPair {
  double sigma;
  Vector u;
  double residual;
};
SigmaPair map_sigma(const MarkovArrivalProcess& map, const ServiceLaw& law,
                    double theta, const Tolerances& tol = kDefaultTolerances);

/// MAP/GI/1 certificate with V(x, i) = e^{theta x} u_i, b = theta,
/// f = (theta - sigma) V and i0 the first index of max u.
DriftCertificate build_map_gi1(const MarkovArrivalProcess& map, const ServiceLaw& law,
                               double theta,
                               const Tolerances& tol = kDefaultTolerances);

enum class ThetaStrategy { kMaxMargin, kMinPrefactor };

struct ThetaSearch {
  ThetaStrategy strategy = ThetaStrategy::kMaxMargin;
  int points = 400;
  /// Reference workload for kMinPrefactor, which minimizes
  /// prefactor * max_i V0(x_ref, i).
  double x_ref = 1.0;
};

/// Deterministic log-grid search over the feasible set
/// {theta > 0 : sigma(theta) < theta, theta below the MGF abscissa}.
double select_theta(const MarkovArrivalProcess& map, const ServiceLaw& law,
                    const ThetaSearch& search = {},
                    const Tolerances& tol = kDefaultTolerances);

/// M/GI/1 certificate with V(x) = e^{theta x}, f = (theta - sigma) V,
/// b = theta.
DriftCertificate build_mg1_light(double lambda, const ServiceLaw& law, double theta,
                                 const Tolerances& tol = kDefaultTolerances);

struct ModerateParams {
  double epsilon;
  double x0;
  double rho_tilde;
};
struct PolynomialParams {
  double kappa_tilde;
  double x0;
  double rho_tilde;
};

/// ((1 - beta) / (epsilon beta))^{1 / beta}, the smallest x0 for which V is
/// convex on [0, inf).
double moderate_x0_floor(double epsilon, double beta);

/// lambda int_0^inf H-bar(y) exp(epsilon y^beta) dy.
double moderate_sufficient_integral(double lambda, const ServiceLaw& law,
                                    double epsilon, double beta);
/// lambda int_0^inf H-bar(y) (1 + y / x0)^{kappa_tilde - 1} dy.
double polynomial_sufficient_integral(double lambda, const ServiceLaw& law,
                                      double kappa_tilde, double x0);

DriftCertificate build_mg1_moderate(double lambda, const ServiceLaw& law,
                                    const ModerateEnvelope& env,
                                    const ModerateParams& params,
                                    const Tolerances& tol = kDefaultTolerances);
DriftCertificate build_mg1_polynomial(double lambda, const ServiceLaw& law,
                                      const PolynomialEnvelope& env,
                                      const PolynomialParams& params,
                                      const Tolerances& tol = kDefaultTolerances);

/// Coarse-to-fine search over (shape parameter, x0, rho_tilde) returning
/// the feasible candidate with the smallest prefactor. Candidates are
/// visited in a fixed order and ties keep the first.
DriftCertificate search_mg1_moderate(double lambda, const ServiceLaw& law,
                                     const ModerateEnvelope& env,
                                     const Tolerances& tol = kDefaultTolerances);
DriftCertificate search_mg1_polynomial(double lambda, const ServiceLaw& law,
                                       const PolynomialEnvelope& env,
                                       const Tolerances& tol = kDefaultTolerances);

struct GeneratorCheck {
  bool passed = true;
  /// Largest (A V - (-f + b 1_C)) / max(1, |A V|, |f|) over the grid.
  double worst_excess = 0.0;
  double worst_x = 0.0;
  int worst_phase = 0;
  int points = 0;
};

/// Evaluates the generator on V at `points` equally spaced workloads in
/// [0, x_hi] (every phase) and compares with -f + b 1_C. The jump term is
/// computed from the integrated tail by quadrature.
GeneratorCheck check_generator(const DriftCertificate& cert, double x_hi,
                               int points = 200,
                               const Tolerances& tol = kDefaultTolerances);

}  // namespace pbound
