#include "pbound/bound_engine.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pbound/error.h"

namespace pbound {

namespace {

constexpr double kLogXiFloor = -690.77552789821368;  // log(1e-300)

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_phase(const MarkovArrivalProcess& map, int i0) {
  if (i0 < 0 || i0 >= map.phases()) {
    throw Error(ErrorCode::kInvalidArgument, "atom phase " + std::to_string(i0) +
                                                 " outside 0.." +
                                                 std::to_string(map.phases() - 1));
  }
}

}  // namespace

std::string ReturnWitness::provenance_name() const {
  if (std::holds_alternative<MapGi1Formula>(provenance)) return "map_gi1_formula";
  if (std::holds_alternative<SpecialCaseLimit>(provenance)) return "special_case_limit";
  return "user_supplied";
}

ReturnWitness user_witness(double t, double xi, int i0) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw Error(ErrorCode::kInvalidArgument, "witness time must be positive");
  }
  if (!(xi > 0.0 && xi <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "witness probability must lie in (0, 1]");
  }
  ReturnWitness w;
  w.t = t;
  w.xi = xi;
  w.ratio = t / xi;
  w.i0 = i0;
  return w;
}

ReturnWitness map_gi1_witness(const MarkovArrivalProcess& map, const ServiceLaw& law,
                              int i0, double t0, double x0, const Tolerances& tol) {
  require_phase(map, i0);
  if (!(t0 > 0.0) || !(x0 > 0.0) || !std::isfinite(t0) || !std::isfinite(x0)) {
    throw Error(ErrorCode::kInvalidArgument, "t0 and x0 must be positive and finite");
  }
  const double mass = law.cdf(x0);
  if (!(mass > 0.0)) {
    throw Error(ErrorCode::kZeroServiceMass, "H(" + fmt(x0) + ") = 0");
  }
  const int m = map.phases();
  const Matrix step = map.d() * matrix_exponential(map.c(), x0, tol.expm);
  Matrix product = matrix_exponential(map.c(), t0, tol.expm);
  double log_scale = 0.0;
  for (int k = 0; k < m; ++k) {
    product = product * step;
    const double top = product.maxCoeff();
    if (!(top > 0.0)) break;
    product /= top;
    log_scale += std::log(top);
  }
  const double entry = product.col(i0).minCoeff();
  const double log_xi = m * std::log(mass) + log_scale +
                        (entry > 0.0 ? std::log(entry)
                                     : -std::numeric_limits<double>::infinity());
  if (!(log_xi >= kLogXiFloor)) {
    throw Error(ErrorCode::kDegenerateXi, "xi_T underflows at t0 = " + fmt(t0) +
                                              ", x0 = " + fmt(x0) +
                                              "; try larger values");
  }
  if (log_xi > 0.0) {
    throw Error(ErrorCode::kDegenerateXi,
                "formula value exp(" + fmt(log_xi) + ") exceeds 1 at t0 = " + fmt(t0) +
                    ", x0 = " + fmt(x0));
  }
  ReturnWitness w;
  w.t = t0 + m * x0;
  w.xi = std::exp(log_xi);
  w.ratio = w.t / w.xi;
  w.i0 = i0;
  w.provenance = MapGi1Formula{t0, x0};
  w.model_key = model_key(map, law);
  return w;
}

ReturnWitness map_gi1_witness_special(const MarkovArrivalProcess& map, int i0) {
  require_phase(map, i0);
  ReturnWitness w;
  w.i0 = i0;
  w.t = 0.0;
  w.xi = 1.0;
  if (map.phases() == 1) {
    w.ratio = 0.0;
    w.provenance = SpecialCaseLimit{std::numeric_limits<double>::infinity()};
    return w;
  }
  double min_rate = std::numeric_limits<double>::infinity();
  for (int i = 0; i < map.phases(); ++i) {
    if (i == i0) continue;
    if (!(map.c()(i, i0) > 0.0)) {
      throw Error(ErrorCode::kConditionViolated,
                  "C(" + std::to_string(i) + "," + std::to_string(i0) + ") is not positive");
    }
    min_rate = std::min(min_rate, map.c()(i, i0));
  }
  w.ratio = 1.0 / min_rate;
  w.provenance = SpecialCaseLimit{min_rate};
  return w;
}

ReturnWitness optimize_witness(const MarkovArrivalProcess& map, const ServiceLaw& law,
                               int i0, std::vector<double> t0s, std::vector<double> x0s,
                               const Tolerances& tol) {
  if (t0s.empty() || x0s.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "witness grid is empty");
  }
  std::sort(t0s.begin(), t0s.end());
  std::sort(x0s.begin(), x0s.end());
  std::optional<ReturnWitness> best;
  for (double t0 : t0s) {
    for (double x0 : x0s) {
      try {
        ReturnWitness w = map_gi1_witness(map, law, i0, t0, x0, tol);
        if (!best || w.ratio < best->ratio) best = std::move(w);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateXi &&
            e.code() != ErrorCode::kZeroServiceMass) {
          throw;
        }
      }
    }
  }
  if (!best) {
    throw Error(ErrorCode::kAllDegenerate, "every witness grid point is degenerate");
  }
  return *best;
}

namespace {

void require_match(const DriftCertificate& cert, const ReturnWitness& w) {
  if (!w.model_key.empty() && w.model_key != cert.model_key()) {
    throw Error(ErrorCode::kMismatchedModel,
                "witness and certificate belong to different models");
  }
  if (w.i0 != cert.i0) {
    throw Error(ErrorCode::kMismatchedModel,
                "witness atom phase " + std::to_string(w.i0) +
                    " differs from the certificate's " + std::to_string(cert.i0));
  }
}

BoundReport with_witness(const DriftCertificate& cert, const ReturnWitness& w,
                         double pi_g_abs) {
  require_match(cert, w);
  return BoundReport{
      .cert = cert,
      .witness = w,
      .kind = BoundKind::kGeneral,
      .pi_g_abs = pi_g_abs,
      .prefactor = 1.0 + pi_g_abs / cert.f_inf,
      .additive = cert.b * w.ratio,
  };
}

}  // namespace

BoundReport general_bound(const DriftCertificate& cert, const ReturnWitness& w,
                          std::optional<double> pi_g_abs) {
  const double cap = cert.b * cert.pi_small_set;
  double value = cap;
  if (pi_g_abs) {
    if (!(*pi_g_abs >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "|<pi, g>| must be nonnegative");
    }
    value = std::min(*pi_g_abs, cap);
  }
  return with_witness(cert, w, value);
}

BoundReport weaker_bound(const DriftCertificate& cert, const ReturnWitness& w) {
  return with_witness(cert, w, cert.b);
}

BoundReport atom_bound(const DriftCertificate& cert, std::optional<double> pi_alpha) {
  if (!cert.small_set_is_atom()) {
    throw Error(ErrorCode::kSmallSetNotAtom,
                "small set spans " + std::to_string(cert.phases()) + " phases");
  }
  const double p = pi_alpha.value_or(cert.pi_small_set);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pi(alpha) must be a probability");
  }
  return BoundReport{
      .cert = cert,
      .witness = std::nullopt,
      .kind = BoundKind::kAtom,
      .pi_g_abs = cert.b * p,
      .prefactor = 1.0 + cert.b * p / cert.f_inf,
      .additive = 0.0,
  };
}

double evaluate_bound(const BoundReport& report, double x, int phase, double c) {
  return c * report.prefactor * (report.cert.v0(x, phase) + report.additive);
}

}  // namespace pbound
