#include "pbound/wcl_distance.h"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "pbound/error.h"
#include "pbound/quadrature.h"

namespace pbound {

namespace {

constexpr int kMaxTerms = 20000;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_mg1(const WclModel& model, const DriftCertificate& cert) {
  if (std::holds_alternative<MapGi1Exp>(cert.regime) || cert.phases() != 1) {
    throw Error(ErrorCode::kMismatchedModel, "distance bound needs an M/GI/1 certificate");
  }
  if (cert.lambda != model.lambda || cert.law.name() != model.law.name()) {
    throw Error(ErrorCode::kMismatchedModel,
                "certificate was built for lambda = " + fmt(cert.lambda) + ", " +
                    cert.law.name());
  }
}

// Outer Stieltjes sums of one resolution, multiplied by (1 - rho) rho^m.
std::vector<double> series_terms(const WclModel& model, const DriftCertificate& cert,
                                 int m_used, int cells, double tol, double& inner_error) {
  const double capacity = model.capacity;
  EquilibriumOptions opts;
  opts.cells = cells;
  opts.max_error = std::numeric_limits<double>::infinity();
  const EquilibriumGrid grid = equilibrium_tables(model.law, m_used, capacity, opts);
  const int n = grid.cells();
  std::vector<double> phi(n + 1);
  inner_error = 0.0;
  for (int k = 0; k <= n; ++k) {
    const InnerIntegral r = inner_tail_integral(model.law, cert, grid.node(k), capacity, tol);
    phi[k] = r.value;
    inner_error = std::max(inner_error, r.error);
  }
  const double rho = model.rho();
  std::vector<double> terms;
  double weight = 1.0 - rho;
  for (int m = 0; m <= m_used; ++m) {
    const auto& t = grid.table(m);
    double s = t[0] * phi[0];
    for (int k = 0; k < n; ++k) s += (t[k + 1] - t[k]) * 0.5 * (phi[k] + phi[k + 1]);
    terms.push_back(weight * s);
    weight *= rho;
  }
  return terms;
}

double sum_of(const std::vector<double>& terms) {
  // Kahan summation in ascending m.
  double s = 0.0, c = 0.0;
  for (double t : terms) {
    const double y = t - c;
    const double next = s + y;
    c = (next - s) - y;
    s = next;
  }
  return s;
}

}  // namespace

InnerIntegral inner_tail_integral(const ServiceLaw& law, const DriftCertificate& cert,
                                  double x, double capacity, double tol) {
  if (!(x >= 0.0) || !(x <= capacity)) {
    throw Error(ErrorCode::kInvalidArgument, "x = " + fmt(x) + " outside [0, L]");
  }
  InnerIntegral out;
  if (std::isinf(capacity)) return out;
  const double a = capacity - x;
  QuadOptions q;
  q.abs_tol = std::min(1e-12, tol * 1e-3);
  q.rel_tol = 1e-10;
  q.max_intervals = 4000;
  const QuadResult r = integrate_against_tail(
      law, [&cert, x](double y) { return cert.dv(x + y); }, a, q);
  if (!r.converged || !std::isfinite(r.value)) {
    throw Error(ErrorCode::kDivergentInnerIntegral,
                "tail integral beyond L - x = " + fmt(a) + " did not converge");
  }
  out.value = (cert.v0(capacity) + cert.v0(x)) * law.tail(a) + r.value;
  out.error = r.error;
  return out;
}

DistanceBound wcl_distance_bound(const WclModel& model, const DriftCertificate& cert,
                                 double tol, int initial_cells, int max_cells) {
  if (!(tol > 0.0) || !std::isfinite(tol)) {
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");
  }
  if (!(model.capacity > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "capacity must be positive");
  }
  if (initial_cells < 2 || max_cells < initial_cells) {
    throw Error(ErrorCode::kInvalidArgument, "bad cell budget");
  }
  require_mg1(model, cert);
  const double rho = check_stability(model.lambda, model.law);
  DistanceBound out;
  out.prefactor = model.lambda * (1.0 + cert.b * (1.0 - rho) / cert.f_inf);
  if (std::isinf(model.capacity)) return out;

  const InnerIntegral sup = inner_tail_integral(model.law, cert, model.capacity,
                                                model.capacity, tol);
  out.sup_term = sup.value;
  double remainder = rho * out.prefactor * out.sup_term;
  int m = 0;
  while (remainder > tol / 2.0) {
    if (++m > kMaxTerms) {
      throw Error(ErrorCode::kToleranceUnreachable,
                  "series remainder above tol / 2 after " + std::to_string(kMaxTerms) +
                      " terms");
    }
    remainder *= rho;
  }
  out.m_used = m;
  out.truncation_error = remainder;

  int cells = initial_cells;
  double inner_error = 0.0;
  std::vector<double> coarse = series_terms(model, cert, m, cells, tol, inner_error);
  while (true) {
    if (2 * cells > max_cells) {
      throw Error(ErrorCode::kToleranceUnreachable,
                  "outer grid budget of " + std::to_string(max_cells) +
                      " cells exhausted before the quadrature error reached tol / 2");
    }
    std::vector<double> fine = series_terms(model, cert, m, 2 * cells, tol, inner_error);
    const double diff = out.prefactor * std::abs(sum_of(fine) - sum_of(coarse));
    const double err = diff + out.prefactor * inner_error;
    cells *= 2;
    if (err <= tol / 2.0) {
      out.quadrature_error = err;
      out.cells = cells;
      for (int k = 0; k <= m; ++k) out.terms.push_back({k, fine[k]});
      out.value = out.prefactor * sum_of(fine) + err + remainder;
      return out;
    }
    coarse = std::move(fine);
  }
}

void DistanceBound::write_terms_csv(std::ostream& out) const {
  out << "m,term\n";
  out.precision(17);
  for (const auto& t : terms) out << t.m << ',' << t.value << '\n';
}

}  // namespace pbound
