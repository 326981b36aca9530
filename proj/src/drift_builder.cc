#include "pbound/drift_builder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "pbound/error.h"
#include "pbound/quadrature.h"

namespace pbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

QuadOptions quad_options(const Tolerances& tol) {
  QuadOptions q;
  q.abs_tol = tol.quad_abs;
  q.rel_tol = tol.quad_rel;
  q.max_intervals = 4000;
  return q;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double mgf_or_throw(const ServiceLaw& law, double theta) {
  try {
    return law.mgf(theta);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kOutsideDomain) {
      throw Error(ErrorCode::kOutsideMgfDomain, e.what());
    }
    throw;
  }
}

void require_theta(const ServiceLaw& law, double theta) {
  if (!std::isfinite(theta) || !(theta > 0.0)) {
    throw Error(ErrorCode::kInfeasibleTheta,
                "theta = " + fmt(theta) + " must be positive; sigma(0) = 0");
  }
  if (!(theta < law.mgf_abscissa())) {
    throw Error(ErrorCode::kOutsideMgfDomain,
                "theta = " + fmt(theta) + " is not below the MGF abscissa " +
                    fmt(law.mgf_abscissa()) + " of " + law.name());
  }
}

// lambda int_0^inf H-bar(y) w(y) dy; InfeasibleParameters unless finite.
double tail_weighted(double lambda, const ServiceLaw& law, const Integrand& w,
                     const char* what, const Tolerances& tol,
                     ErrorCode failure = ErrorCode::kInfeasibleParameters) {
  const QuadResult r = integrate_against_tail(law, w, 0.0, quad_options(tol));
  if (!r.converged || !std::isfinite(r.value)) {
    throw Error(failure, std::string(what) + " did not converge");
  }
  return lambda * r.value;
}

}  // namespace

double DriftCertificate::v(double x, int phase) const {
  return scale * std::visit(
                     Overloaded{
                         [&](const MapGi1Exp& r) { return std::exp(r.theta * x) * r.u(phase); },
                         [&](const Mg1Light& r) { return std::exp(r.theta * x); },
                         [&](const Mg1Moderate& r) {
                           return std::exp(r.epsilon * std::pow(x + r.x0, r.beta));
                         },
                         [&](const Mg1Polynomial& r) {
                           return std::pow(x + r.x0, r.kappa_tilde);
                         },
                     },
                     regime);
}

double DriftCertificate::v0(double x, int phase) const {
  return v(x, phase) - v(0.0, i0);
}

double DriftCertificate::dv(double x, int phase) const {
  return scale *
         std::visit(
             Overloaded{
                 [&](const MapGi1Exp& r) {
                   return r.theta * std::exp(r.theta * x) * r.u(phase);
                 },
                 [&](const Mg1Light& r) { return r.theta * std::exp(r.theta * x); },
                 [&](const Mg1Moderate& r) {
                   const double s = x + r.x0;
                   return r.epsilon * r.beta * std::pow(s, r.beta - 1.0) *
                          std::exp(r.epsilon * std::pow(s, r.beta));
                 },
                 [&](const Mg1Polynomial& r) {
                   return r.kappa_tilde * std::pow(x + r.x0, r.kappa_tilde - 1.0);
                 },
             },
             regime);
}

double DriftCertificate::f(double x, int phase) const {
  return std::visit(Overloaded{
                        [&](const MapGi1Exp& r) { return (r.theta - r.sigma) * v(x, phase); },
                        [&](const Mg1Light& r) { return (r.theta - r.sigma) * v(x, phase); },
                        [&](const Mg1Moderate& r) { return (1.0 - r.rho_tilde) * dv(x, phase); },
                        [&](const Mg1Polynomial& r) {
                          return (1.0 - r.rho_tilde) * dv(x, phase);
                        },
                    },
                    regime);
}

double DriftCertificate::f_integral(double lo, double hi, int phase) const {
  return std::visit(
      Overloaded{
          [&](const MapGi1Exp& r) {
            return (r.theta - r.sigma) * (v(hi, phase) - v(lo, phase)) / r.theta;
          },
          [&](const Mg1Light& r) {
            return (r.theta - r.sigma) * (v(hi, phase) - v(lo, phase)) / r.theta;
          },
          [&](const Mg1Moderate& r) {
            return (1.0 - r.rho_tilde) * (v(hi, phase) - v(lo, phase));
          },
          [&](const Mg1Polynomial& r) {
            return (1.0 - r.rho_tilde) * (v(hi, phase) - v(lo, phase));
          },
      },
      regime);
}

DriftCertificate DriftCertificate::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw Error(ErrorCode::kInvalidArgument, "scale must be positive and finite");
  }
  DriftCertificate out = *this;
  out.scale *= c;
  out.b *= c;
  out.f_inf *= c;
  return out;
}

std::string DriftCertificate::regime_name() const {
  return std::visit(Overloaded{
                        [](const MapGi1Exp&) { return std::string("map_gi1_exp"); },
                        [](const Mg1Light&) { return std::string("light"); },
                        [](const Mg1Moderate&) { return std::string("moderate"); },
                        [](const Mg1Polynomial&) { return std::string("polynomial"); },
                    },
                    regime);
}

std::string DriftCertificate::model_key() const { return pbound::model_key(map, law); }

std::string model_key(const MarkovArrivalProcess& map, const ServiceLaw& law) {
  std::ostringstream os;
  os.precision(17);
  os << "C=";
  for (Eigen::Index i = 0; i < map.c().size(); ++i) os << map.c().data()[i] << ',';
  os << ";D=";
  for (Eigen::Index i = 0; i < map.d().size(); ++i) os << map.d().data()[i] << ',';
  os << ";H=" << law.name();
  return os.str();
}

double check_stability(double lambda, const ServiceLaw& law) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "arrival rate must be positive");
  }
  const double rho = lambda * law.mean();
  if (!(rho < 1.0)) {
    throw Error(ErrorCode::kUnstable, "rho = " + fmt(rho) + " is not below 1");
  }
  return rho;
}

SigmaPair map_sigma(const MarkovArrivalProcess& map, const ServiceLaw& law,
                    double theta, const Tolerances& tol) {
  const double m = mgf_or_throw(law, theta);
  const Matrix b = map.c() + m * map.d();
  const Eigen::Index n = b.rows();
  const double shift = b.diagonal().cwiseAbs().maxCoeff() + 1.0;
  const PerronPair pp = perron_eigenpair(b + shift * Matrix::Identity(n, n),
                                         tol.perron, tol.perron_max_iter);
  SigmaPair out;
  out.sigma = pp.eigenvalue - shift;
  out.u = pp.eigenvector;
  out.residual = (b * out.u - out.sigma * out.u).lpNorm<Eigen::Infinity>();
  if (!(out.residual <= tol.residual)) {
    throw Error(ErrorCode::kNotConverged,
                "eigen-residual " + fmt(out.residual) + " exceeds " + fmt(tol.residual));
  }
  return out;
}

DriftCertificate build_map_gi1(const MarkovArrivalProcess& map, const ServiceLaw& law,
                               double theta, const Tolerances& tol) {
  require_theta(law, theta);
  const PhaseStationary ps = stationary_phase(map, tol);
  const double rho = check_stability(ps.lambda, law);
  const SigmaPair sp = map_sigma(map, law, theta, tol);
  if (!(sp.sigma < theta)) {
    throw Error(ErrorCode::kInfeasibleTheta,
                "sigma(theta) = " + fmt(sp.sigma) + " is not below theta = " + fmt(theta));
  }
  const double f_inf = (theta - sp.sigma) * sp.u.minCoeff();
  if (!(f_inf >= tol.f_inf_floor)) {
    throw Error(ErrorCode::kInfeasibleTheta, "inf f = " + fmt(f_inf) + " is below the floor");
  }
  Eigen::Index i0 = 0;
  sp.u.maxCoeff(&i0);
  return DriftCertificate{
      .map = map,
      .law = law,
      .regime = MapGi1Exp{theta, sp.sigma, sp.u},
      .lambda = ps.lambda,
      .rho = rho,
      .pi_small_set = 1.0 - rho,
      .b = theta,
      .f_inf = f_inf,
      .i0 = static_cast<int>(i0),
  };
}

double select_theta(const MarkovArrivalProcess& map, const ServiceLaw& law,
                    const ThetaSearch& search, const Tolerances& tol) {
  if (search.points < 2) {
    throw Error(ErrorCode::kInvalidArgument, "theta search needs at least 2 points");
  }
  const PhaseStationary ps = stationary_phase(map, tol);
  const double rho = check_stability(ps.lambda, law);
  double hi = law.mgf_abscissa();
  if (std::isinf(hi)) {
    // sigma grows without bound, so some doubling step is infeasible.
    hi = 1.0;
    while (hi < 1e18 && map_sigma(map, law, hi, tol).sigma < hi) hi *= 2.0;
  }
  const double lo = hi * 1e-6;
  const double ratio = std::log(hi / lo);
  std::optional<double> best;
  double best_score = kInf;
  for (int k = 1; k < search.points; ++k) {
    const double theta = lo * std::exp(ratio * k / search.points);
    if (!(theta < law.mgf_abscissa())) continue;
    SigmaPair sp;
    try {
      sp = map_sigma(map, law, theta, tol);
    } catch (const Error&) {
      continue;
    }
    const double margin = theta - sp.sigma;
    if (!(margin > 0.0) || margin * sp.u.minCoeff() < tol.f_inf_floor) continue;
    double score = 0.0;
    if (search.strategy == ThetaStrategy::kMaxMargin) {
      score = -margin;
    } else {
      const double prefactor = 1.0 + theta * (1.0 - rho) / (margin * sp.u.minCoeff());
      score = prefactor * (sp.u.maxCoeff() * std::exp(theta * search.x_ref) - 1.0);
    }
    if (score < best_score) {
      best_score = score;
      best = theta;
    }
  }
  if (!best) {
    throw Error(ErrorCode::kNoFeasibleTheta, "no grid point satisfies sigma(theta) < theta");
  }
  return *best;
}

DriftCertificate build_mg1_light(double lambda, const ServiceLaw& law, double theta,
                                 const Tolerances& tol) {
  const double rho = check_stability(lambda, law);
  require_theta(law, theta);
  const double sigma = -lambda + lambda * mgf_or_throw(law, theta);
  if (!(sigma < theta)) {
    throw Error(ErrorCode::kInfeasibleTheta,
                "sigma(theta) = " + fmt(sigma) + " is not below theta = " + fmt(theta));
  }
  const double f_inf = theta - sigma;
  if (!(f_inf >= tol.f_inf_floor)) {
    throw Error(ErrorCode::kInfeasibleTheta, "inf f = " + fmt(f_inf) + " is below the floor");
  }
  return DriftCertificate{
      .map = MarkovArrivalProcess::poisson(lambda),
      .law = law,
      .regime = Mg1Light{theta, sigma},
      .lambda = lambda,
      .rho = rho,
      .pi_small_set = 1.0 - rho,
      .b = theta,
      .f_inf = f_inf,
  };
}

double moderate_x0_floor(double epsilon, double beta) {
  return std::pow((1.0 - beta) / (epsilon * beta), 1.0 / beta);
}

double moderate_sufficient_integral(double lambda, const ServiceLaw& law,
                                    double epsilon, double beta) {
  return tail_weighted(
      lambda, law, [=](double y) { return std::exp(epsilon * std::pow(y, beta)); },
      "sufficient integral", kDefaultTolerances);
}

double polynomial_sufficient_integral(double lambda, const ServiceLaw& law,
                                      double kappa_tilde, double x0) {
  return tail_weighted(
      lambda, law, [=](double y) { return std::pow(1.0 + y / x0, kappa_tilde - 1.0); },
      "sufficient integral", kDefaultTolerances);
}

namespace {

void require_envelope(const ServiceLaw& law, const TailEnvelope& env) {
  validate_envelope(env);
  const EnvelopeVerdict verdict = verify_envelope(law, env);
  if (!verdict.holds) {
    throw Error(ErrorCode::kEnvelopeViolated,
                "tail exceeds the " + envelope_name(env) + " envelope by " +
                    fmt(verdict.worst_excess) + " at x = " + fmt(verdict.worst_x));
  }
}

void require_rho_tilde(double rho_tilde, double rho) {
  if (!(rho_tilde > rho && rho_tilde < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "rho_tilde = " + fmt(rho_tilde) + " must lie in (rho, 1) = (" + fmt(rho) +
                    ", 1)");
  }
}

// Completes an M/GI/1 certificate with b at equality and f = (1 - rho~) V'.
DriftCertificate finish_mg1(double lambda, const ServiceLaw& law, double rho,
                            DriftRegime regime, double rho_tilde, const Tolerances& tol,
                            ErrorCode failure = ErrorCode::kInfeasibleParameters) {
  DriftCertificate cert{
      .map = MarkovArrivalProcess::poisson(lambda),
      .law = law,
      .regime = std::move(regime),
      .lambda = lambda,
      .rho = rho,
      .pi_small_set = 1.0 - rho,
  };
  const double jump = tail_weighted(
      lambda, law, [&cert](double y) { return cert.dv(y); }, "b integral", tol, failure);
  cert.f_inf = (1.0 - rho_tilde) * cert.dv(0.0);
  cert.b = cert.f_inf + jump;
  if (!(cert.f_inf >= tol.f_inf_floor)) {
    throw Error(ErrorCode::kInfeasibleParameters,
                "inf f = " + fmt(cert.f_inf) + " is below the floor");
  }
  return cert;
}

DriftCertificate moderate_unchecked(double lambda, const ServiceLaw& law, double rho,
                                    const ModerateEnvelope& env, const ModerateParams& p,
                                    double sufficient, const Tolerances& tol) {
  if (sufficient > p.rho_tilde) {
    throw Error(ErrorCode::kInfeasibleParameters,
                "sufficient integral " + fmt(sufficient) + " exceeds rho_tilde " +
                    fmt(p.rho_tilde));
  }
  return finish_mg1(lambda, law, rho,
                    Mg1Moderate{p.epsilon, env.beta, p.x0, p.rho_tilde, sufficient},
                    p.rho_tilde, tol);
}

DriftCertificate polynomial_unchecked(double lambda, const ServiceLaw& law, double rho,
                                      const PolynomialParams& p, double sufficient,
                                      const Tolerances& tol) {
  if (sufficient > p.rho_tilde) {
    throw Error(ErrorCode::kInfeasibleParameters,
                "sufficient integral " + fmt(sufficient) + " exceeds rho_tilde " +
                    fmt(p.rho_tilde));
  }
  return finish_mg1(lambda, law, rho,
                    Mg1Polynomial{p.kappa_tilde, p.x0, p.rho_tilde, sufficient},
                    p.rho_tilde, tol, ErrorCode::kTailTooHeavy);
}

// Smallest value of rho + (1 - rho) k / 200, k = 1..199, at or above s.
std::optional<double> rho_tilde_for(double s, double rho) {
  for (int k = 1; k < 200; ++k) {
    const double r = rho + (1.0 - rho) * k / 200.0;
    if (r >= s) return r;
  }
  return std::nullopt;
}

}  // namespace

DriftCertificate build_mg1_moderate(double lambda, const ServiceLaw& law,
                                    const ModerateEnvelope& env, const ModerateParams& p,
                                    const Tolerances& tol) {
  const double rho = check_stability(lambda, law);
  validate_envelope(env);
  if (!(p.epsilon > 0.0 && p.epsilon < env.gamma)) {
    throw Error(ErrorCode::kInvalidArgument,
                "epsilon = " + fmt(p.epsilon) + " must lie in (0, gamma = " +
                    fmt(env.gamma) + ")");
  }
  const double floor = moderate_x0_floor(p.epsilon, env.beta);
  if (!(p.x0 >= floor * (1.0 - 1e-12))) {
    throw Error(ErrorCode::kInvalidArgument,
                "x0 = " + fmt(p.x0) + " is below the convexity floor " + fmt(floor));
  }
  require_rho_tilde(p.rho_tilde, rho);
  require_envelope(law, env);
  const double s = moderate_sufficient_integral(lambda, law, p.epsilon, env.beta);
  return moderate_unchecked(lambda, law, rho, env, p, s, tol);
}

DriftCertificate build_mg1_polynomial(double lambda, const ServiceLaw& law,
                                      const PolynomialEnvelope& env,
                                      const PolynomialParams& p, const Tolerances& tol) {
  const double rho = check_stability(lambda, law);
  validate_envelope(env);
  if (!(p.kappa_tilde > 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "kappa_tilde must exceed 1");
  }
  if (!(p.kappa_tilde < env.kappa)) {
    throw Error(ErrorCode::kTailTooHeavy,
                "kappa_tilde = " + fmt(p.kappa_tilde) + " is not below kappa = " +
                    fmt(env.kappa));
  }
  if (!(p.x0 >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "x0 must be at least 1");
  }
  require_rho_tilde(p.rho_tilde, rho);
  require_envelope(law, env);
  const double s = polynomial_sufficient_integral(lambda, law, p.kappa_tilde, p.x0);
  return polynomial_unchecked(lambda, law, rho, p, s, tol);
}

DriftCertificate search_mg1_moderate(double lambda, const ServiceLaw& law,
                                     const ModerateEnvelope& env, const Tolerances& tol) {
  const double rho = check_stability(lambda, law);
  require_envelope(law, env);
  std::optional<DriftCertificate> best;
  auto visit = [&](double eps) {
    if (!(eps > 0.0 && eps < env.gamma)) return;
    double s = 0.0;
    try {
      s = moderate_sufficient_integral(lambda, law, eps, env.beta);
    } catch (const Error&) {
      return;
    }
    const auto rt = rho_tilde_for(s, rho);
    if (!rt) return;
    const double floor = moderate_x0_floor(eps, env.beta);
    for (double factor : {1.0, 1.5, 2.0, 3.0, 5.0}) {
      try {
        DriftCertificate c = moderate_unchecked(
            lambda, law, rho, env, ModerateParams{eps, floor * factor, *rt}, s, tol);
        if (!best || c.prefactor() < best->prefactor()) best = std::move(c);
      } catch (const Error&) {
      }
    }
  };
  const double step = 0.05 * env.gamma;
  for (int k = 1; k < 20; ++k) visit(step * k);
  if (best) {
    const double centre = std::get<Mg1Moderate>(best->regime).epsilon;
    for (double d : {-0.5, -0.25, 0.25, 0.5}) visit(centre + d * step);
  }
  if (!best) {
    throw Error(ErrorCode::kInfeasibleParameters,
                "no (epsilon, x0, rho_tilde) on the search grid is feasible");
  }
  return *best;
}

DriftCertificate search_mg1_polynomial(double lambda, const ServiceLaw& law,
                                       const PolynomialEnvelope& env,
                                       const Tolerances& tol) {
  const double rho = check_stability(lambda, law);
  require_envelope(law, env);
  std::optional<DriftCertificate> best;
  auto visit = [&](double kt) {
    if (!(kt > 1.0 && kt < env.kappa)) return;
    for (double x0 : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
      try {
        const double s = polynomial_sufficient_integral(lambda, law, kt, x0);
        const auto rt = rho_tilde_for(s, rho);
        if (!rt) continue;
        DriftCertificate c =
            polynomial_unchecked(lambda, law, rho, PolynomialParams{kt, x0, *rt}, s, tol);
        if (!best || c.prefactor() < best->prefactor()) best = std::move(c);
      } catch (const Error&) {
      }
    }
  };
  const double step = 0.05 * (env.kappa - 1.0);
  for (int k = 1; k < 20; ++k) visit(1.0 + step * k);
  if (best) {
    const double centre = std::get<Mg1Polynomial>(best->regime).kappa_tilde;
    for (double d : {-0.5, -0.25, 0.25, 0.5}) visit(centre + d * step);
  }
  if (!best) {
    throw Error(ErrorCode::kInfeasibleParameters,
                "no (kappa_tilde, x0, rho_tilde) on the search grid is feasible");
  }
  return *best;
}

GeneratorCheck check_generator(const DriftCertificate& cert, double x_hi, int points,
                               const Tolerances& tol) {
  if (points < 2 || !(x_hi > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad generator-check grid");
  }
  const QuadOptions q = quad_options(tol);
  const Matrix& c = cert.map.c();
  const Matrix& d = cert.map.d();
  const int m = cert.phases();
  GeneratorCheck out;
  out.worst_excess = -kInf;
  for (int k = 0; k < points; ++k) {
    const double x = x_hi * k / (points - 1);
    // E V(x + S, j) = V(x, j) + int_0^inf H-bar(y) V'(x + y, j) dy.
    std::vector<double> jump(m);
    for (int j = 0; j < m; ++j) {
      const QuadResult r = integrate_against_tail(
          cert.law, [&cert, x, j](double y) { return cert.dv(x + y, j); }, 0.0, q);
      jump[j] = r.value;
    }
    for (int i = 0; i < m; ++i) {
      double av = x > 0.0 ? -cert.dv(x, i) : 0.0;
      for (int j = 0; j < m; ++j) {
        av += c(i, j) * cert.v(x, j) + d(i, j) * (cert.v(x, j) + jump[j]);
      }
      const double fx = cert.f(x, i);
      const double rhs = -fx + (cert.in_small_set(x, i) ? cert.b : 0.0);
      const double excess =
          (av - rhs) / std::max({1.0, std::abs(av), std::abs(fx)});
      if (excess > out.worst_excess) {
        out.worst_excess = excess;
        out.worst_x = x;
        out.worst_phase = i;
      }
      if (!(excess <= tol.generator_check)) out.passed = false;
      ++out.points;
    }
  }
  return out;
}

}  // namespace pbound
