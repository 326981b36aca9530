#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>

#include "pbound/quadrature.h"

namespace pbound {
namespace {

TEST(Integrate, PolynomialIsExact) {
  const QuadResult r = integrate([](double x) { return 3 * x * x - 2 * x + 1; }, -1.0, 2.0);
  EXPECT_NEAR(r.value, 9.0 - 3.0 + 3.0, 1e-13);
  EXPECT_TRUE(r.converged);
}

TEST(Integrate, OscillatoryAgainstTanhSinh) {
  auto f = [](double x) { return std::sin(7 * x) * std::exp(-x / 3); };
  boost::math::quadrature::tanh_sinh<double> oracle;
  const double expected = oracle.integrate(f, 0.0, 10.0);
  const QuadResult r = integrate(f, 0.0, 10.0);
  EXPECT_NEAR(r.value, expected, 1e-10);
}

TEST(Integrate, EndpointSingularity) {
  auto f = [](double x) { return 1.0 / std::sqrt(x); };
  const QuadResult r = integrate(f, 0.0, 4.0, {1e-9, 1e-9, 4000});
  EXPECT_NEAR(r.value, 4.0, 1e-7);
}

TEST(Integrate, ReversedBoundsNegate) {
  auto f = [](double x) { return std::cos(x); };
  EXPECT_NEAR(integrate(f, 1.0, 0.0).value, -std::sin(1.0), 1e-13);
}

TEST(IntegrateToInfinity, HeavyTailAgainstExpSinh) {
  auto f = [](double y) { return std::pow(1.0 + y / 2.0, -3.0) * (1.0 + y / 4.0); };
  boost::math::quadrature::exp_sinh<double> oracle;
  const double expected = oracle.integrate(f, 0.0, std::numeric_limits<double>::infinity());
  const QuadResult r = integrate_to_infinity(f, 0.0, {1e-12, 1e-11, 4000});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, expected, 1e-8 * expected);
}

TEST(IntegrateToInfinity, StretchedExponential) {
  // int_0^inf exp(-sqrt(y)) dy = 2.
  const QuadResult r =
      integrate_to_infinity([](double y) { return std::exp(-std::sqrt(y)); }, 0.0);
  EXPECT_NEAR(r.value, 2.0, 1e-9);
}

TEST(IntegrateToInfinity, ShiftedStart) {
  const QuadResult r = integrate_to_infinity([](double y) { return std::exp(-2 * y); }, 1.5);
  EXPECT_NEAR(r.value, 0.5 * std::exp(-3.0), 1e-14);
}

TEST(IntegrateToInfinity, DivergenceIsFlagged) {
  const QuadResult r = integrate_to_infinity([](double y) { return 1.0 / (1.0 + y); }, 0.0,
                                             {1e-12, 1e-10, 200});
  EXPECT_FALSE(r.converged);
}

TEST(Integrate, NonFiniteIntegrandIsFlagged) {
  const QuadResult r = integrate([](double) { return std::nan(""); }, 0.0, 1.0);
  EXPECT_FALSE(r.converged);
}

}  // namespace
}  // namespace pbound
