#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <sstream>

#include "pbound/error.h"
#include "pbound/wcl_distance.h"

namespace pbound {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DriftCertificate mm1() { return build_mg1_light(0.5, ServiceLaw::exponential(1.0), 0.4); }

WclModel mm1_wcl(double capacity) { return {0.5, ServiceLaw::exponential(1.0), capacity}; }

// Inner integral for Exp(1) service and V = e^{0.4 x}, a = L - x.
double phi_closed(double x, double capacity) {
  const double a = capacity - x;
  return std::exp(0.4 * x) * std::exp(-0.6 * a) / 0.6 + (std::exp(0.4 * x) - 2.0) * std::exp(-a);
}

// Full series with H_re^{*m} = Erlang(m, 1), summed until the geometric
// weight is negligible.
double erlang_series(double capacity) {
  using boost::math::quadrature::gauss_kronrod;
  const double rho = 0.5;
  const double prefactor = 0.5 * (1.0 + 0.4 * 0.5 * 15.0);
  double total = (1.0 - rho) * phi_closed(0.0, capacity);
  double weight = (1.0 - rho) * rho;
  for (int m = 1; m < 200 && weight > 1e-18; ++m, weight *= rho) {
    auto density = [m](double x) { return std::exp((m - 1) * std::log(x) - x - std::lgamma(m)); };
    const double part = gauss_kronrod<double, 61>::integrate(
        [&](double x) { return density(x) * phi_closed(x, capacity); }, 0.0, capacity, 15, 1e-13);
    total += weight * part;
  }
  return prefactor * total;
}

TEST(InnerIntegral, MatchesClosedForm) {
  const DriftCertificate cert = mm1();
  const ServiceLaw law = ServiceLaw::exponential(1.0);
  for (double capacity : {5.0, 10.0}) {
    for (double x : {0.0, 1.0, 2.5, capacity - 0.5, capacity}) {
      const InnerIntegral r = inner_tail_integral(law, cert, x, capacity, 1e-6);
      EXPECT_NEAR(r.value, phi_closed(x, capacity), 1e-8 * phi_closed(x, capacity));
    }
  }
}

TEST(InnerIntegral, InfiniteCapacityAndRange) {
  const DriftCertificate cert = mm1();
  const ServiceLaw law = ServiceLaw::exponential(1.0);
  EXPECT_EQ(inner_tail_integral(law, cert, 3.0, kInf, 1e-3).value, 0.0);
  EXPECT_THROW(inner_tail_integral(law, cert, 6.0, 5.0, 1e-3), Error);
}

TEST(InnerIntegral, IncreasingInX) {
  const DriftCertificate cert = mm1();
  const ServiceLaw law = ServiceLaw::exponential(1.0);
  double prev = 0.0;
  for (double x = 0.0; x <= 10.0; x += 0.5) {
    const double v = inner_tail_integral(law, cert, x, 10.0, 1e-6).value;
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Distance, InfiniteCapacityIsZero) {
  const DistanceBound d = wcl_distance_bound(mm1_wcl(kInf), mm1(), 1e-3);
  EXPECT_EQ(d.value, 0.0);
  EXPECT_TRUE(d.terms.empty());
}

TEST(Distance, AgreesWithErlangSeries) {
  for (double capacity : {5.0, 10.0, 20.0}) {
    const double tol = 1e-3;
    const DistanceBound d = wcl_distance_bound(mm1_wcl(capacity), mm1(), tol);
    const double oracle = erlang_series(capacity);
    EXPECT_GE(d.value, oracle - tol / 2) << capacity;
    EXPECT_LE(d.value, oracle + tol) << capacity;
    EXPECT_LE(d.truncation_error, tol / 2);
    EXPECT_LE(d.quadrature_error, tol / 2);
    EXPECT_NEAR(d.prefactor, 2.0, 1e-12);
    EXPECT_NEAR(d.sup_term, phi_closed(capacity, capacity), 1e-8 * d.sup_term);
  }
}

TEST(Distance, DecreasesInCapacity) {
  double prev = kInf;
  for (double capacity : {5.0, 10.0, 20.0, 30.0}) {
    const double v = wcl_distance_bound(mm1_wcl(capacity), mm1(), 1e-3).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Distance, TighterToleranceStaysWithinTolerance) {
  const double tol = 1e-2;
  const DistanceBound coarse = wcl_distance_bound(mm1_wcl(10.0), mm1(), tol);
  const DistanceBound fine = wcl_distance_bound(mm1_wcl(10.0), mm1(), tol / 10, 1000, 64000);
  EXPECT_LE(std::abs(coarse.value - fine.value), tol);
  EXPECT_GE(coarse.m_used, 1);
  EXPECT_GT(fine.m_used, coarse.m_used);
}

TEST(Distance, TermsBoundedByGeometricSup) {
  const DistanceBound d = wcl_distance_bound(mm1_wcl(10.0), mm1(), 1e-3);
  double w = 0.5;
  for (const DistanceTerm& t : d.terms) {
    EXPECT_GE(t.value, 0.0);
    EXPECT_LE(t.value, w * d.sup_term * (1 + 1e-9)) << t.m;
    w *= 0.5;
  }
  std::ostringstream os;
  d.write_terms_csv(os);
  EXPECT_EQ(os.str().substr(0, 7), "m,term\n");
}

TEST(Distance, HeavyTailCertificate) {
  const ServiceLaw law = ServiceLaw::pareto_tail(3, 2);
  const DriftCertificate cert = build_mg1_polynomial(0.5, law, {8.0, 3.0}, {2.0, 4.0, 0.8});
  const DistanceBound a = wcl_distance_bound({0.5, law, 10.0}, cert, 1e-2);
  const DistanceBound b = wcl_distance_bound({0.5, law, 40.0}, cert, 1e-2);
  EXPECT_GT(a.value, b.value);
  EXPECT_GT(b.value, 0.0);
}

TEST(Distance, Mismatches) {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code([] { wcl_distance_bound({0.4, ServiceLaw::exponential(1.0), 5.0}, mm1(), 1e-3); }),
            ErrorCode::kMismatchedModel);
  Matrix c(2, 2), d(2, 2);
  c << -3.0, 1.0, 0.5, -1.0;
  d << 2.0, 0.0, 0.0, 0.5;
  const DriftCertificate map_cert =
      build_map_gi1(validate_map(c, d), ServiceLaw::exponential(2.0), 0.4);
  EXPECT_EQ(code([&] {
              wcl_distance_bound({1.0, ServiceLaw::exponential(2.0), 5.0}, map_cert, 1e-3);
            }),
            ErrorCode::kMismatchedModel);
  EXPECT_EQ(code([] { wcl_distance_bound(mm1_wcl(5.0), mm1(), 0.0); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code([] { wcl_distance_bound(mm1_wcl(5.0), mm1(), 1e-9, 100, 200); }),
            ErrorCode::kToleranceUnreachable);
}

}  // namespace
}  // namespace pbound
