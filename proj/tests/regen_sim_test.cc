#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "pbound/error.h"
#include "pbound/regen_sim.h"

namespace pbound {
namespace {

SimModel mm1(double capacity = std::numeric_limits<double>::infinity()) {
  return SimModel::mg1(0.5, ServiceLaw::exponential(1.0), capacity);
}

MarkovArrivalProcess mmpp() {
  Matrix c(2, 2), d(2, 2);
  c << -3.0, 1.0, 0.5, -1.0;
  d << 2.0, 0.0, 0.0, 0.5;
  return validate_map(c, d);
}

TEST(Simulation, ConstantRewardIsExactlyOne) {
  const RegenerativeEstimate e = estimate_pi_g(mm1(), RewardFunction::constant(1.0), 1000, 5);
  EXPECT_NEAR(e.point, 1.0, 1e-12);
  EXPECT_LE(e.std_error, 1e-9);
}

TEST(Simulation, IdleProbabilityIsOneMinusRho) {
  const RegenerativeEstimate e =
      estimate_pi_g(mm1(), RewardFunction::zero_indicator(), 100000, 11);
  EXPECT_NEAR(e.point, 0.5, 3.5 * e.std_error);
  EXPECT_LT(e.std_error, 0.01);
}

TEST(Simulation, MeanWorkloadMatchesPollaczekKhinchine) {
  // E W = rho E S^2 / (2 E S (1 - rho)) = 1 for M/M/1 with rho = 1/2.
  const RewardFunction g =
      RewardFunction::custom([](double w, int) { return w; });
  const RegenerativeEstimate e = estimate_pi_g(mm1(), g, 100000, 12);
  EXPECT_NEAR(e.point, 1.0, 3.5 * e.std_error);
}

TEST(Simulation, CycleLengthFromAtom) {
  // Idle period 1/lambda plus busy period E S / (1 - rho).
  const SimModel model = mm1();
  double sum = 0.0, sq = 0.0, occ = 0.0;
  const int n = 100000;
  for (int r = 0; r < n; ++r) {
    RandomStream s = RandomStream::derived(3, r);
    const CycleRecord c = simulate_cycle(model, {0.0, 0}, {}, s);
    sum += c.tau;
    sq += c.tau * c.tau;
    occ += c.occupation_c;
    EXPECT_GE(c.arrivals, 1u);
  }
  const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, 4.0, 3.5 * se);
  EXPECT_NEAR(occ / n, 2.0, 0.05);
}

TEST(Simulation, HittingTimeFromPositiveWorkload) {
  // E_x tau = x / (1 - rho).
  const SimModel model = mm1();
  for (double x : {1.0, 3.0}) {
    double sum = 0.0, sq = 0.0;
    const int n = 40000;
    for (int r = 0; r < n; ++r) {
      RandomStream s = RandomStream::derived(4, r);
      const double t = simulate_cycle(model, {x, 0}, {}, s).tau;
      sum += t;
      sq += t * t;
    }
    const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_NEAR(mean, 2.0 * x, 3.5 * se) << x;
  }
}

TEST(Simulation, SameSeedSameEstimate) {
  const RewardFunction g = RewardFunction::exponential(1.0, 0.2, Vector::Ones(1));
  const RegenerativeEstimate a = estimate_pi_g(mm1(), g, 2000, 99);
  const RegenerativeEstimate b = estimate_pi_g(mm1(), g, 2000, 99);
  const RegenerativeEstimate c = estimate_pi_g(mm1(), g, 2000, 100);
  EXPECT_EQ(a.point, b.point);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_NE(a.point, c.point);
}

TEST(Simulation, PoissonSolutionAgainstClosedForm) {
  // With f = 0.075 e^{0.2 x}: <pi, f> = 0.1 and h(x) = e^{0.2x} - 1 - 0.2x.
  const SimModel model = mm1();
  const RewardFunction f = RewardFunction::exponential(0.075, 0.2, Vector::Ones(1));
  const RegenerativeEstimate pi = estimate_pi_g(model, f, 100000, 21);
  EXPECT_NEAR(pi.point, 0.1, 3.5 * pi.std_error);
  for (double x : {1.0, 3.0, 6.0}) {
    const RegenerativeEstimate h = estimate_h(model, f, {x, 0}, 20000, pi, 22);
    const double exact = std::exp(0.2 * x) - 1.0 - 0.2 * x;
    EXPECT_NEAR(h.point, exact, 3.5 * h.std_error) << x;
  }
}

TEST(Simulation, AtomValueIsZero) {
  const SimModel model = mm1();
  const RewardFunction f = RewardFunction::exponential(0.075, 0.2, Vector::Ones(1));
  const RegenerativeEstimate pi = estimate_pi_g(model, f, 20000, 23);
  const RegenerativeEstimate h = estimate_h(model, f, {0.0, 0}, 1000, pi, 24);
  EXPECT_EQ(h.point, 0.0);
  EXPECT_EQ(h.std_error, 0.0);
  const RegenerativeEstimate rf = estimate_h_return_form(model, f, {0.0, 0}, 20000, pi, 25);
  EXPECT_NEAR(rf.point, 0.0, 3.5 * rf.std_error);
}

TEST(Simulation, CertificateRewardMatchesExponential) {
  const DriftCertificate cert = build_mg1_light(0.5, ServiceLaw::exponential(1.0), 0.2);
  const RewardFunction f = RewardFunction::certificate_f(cert);
  EXPECT_NEAR(f.at_zero(0), cert.f(0.0), 1e-15);
  EXPECT_NEAR(f.decay_integral(0.5, 2.0, 0), cert.f_integral(0.5, 2.0), 1e-14);
  const RewardFunction q = RewardFunction::custom([&](double w, int) { return cert.f(w); });
  EXPECT_NEAR(q.decay_integral(0.5, 2.0, 0), cert.f_integral(0.5, 2.0), 1e-11);
}

TEST(Simulation, RestrictedReward) {
  const RewardFunction g = RewardFunction::restricted(RewardFunction::constant(1.0), 1.0, 2.0);
  EXPECT_EQ(g.at_zero(0), 0.0);
  EXPECT_NEAR(g.decay_integral(0.0, 3.0, 0), 1.0, 1e-15);
  EXPECT_NEAR(g.decay_integral(1.5, 3.0, 0), 0.5, 1e-15);
  const RewardFunction z = RewardFunction::restricted(RewardFunction::constant(1.0), -1.0, 2.0);
  EXPECT_EQ(z.at_zero(0), 1.0);
}

TEST(Simulation, ReturnProbabilities) {
  const SimModel model = SimModel::from_map(mmpp(), ServiceLaw::exponential(2.0), 0);
  EXPECT_EQ(estimate_return_probability(model, 0, 0.0, 100, 1).point, 1.0);
  EXPECT_EQ(estimate_return_probability(model, 1, 0.0, 100, 1).point, 0.0);
  const RegenerativeEstimate p = estimate_return_probability(mm1(), 0, 0.5, 20000, 2);
  EXPECT_GE(p.point, std::exp(-0.25) - 3.0 * p.std_error);
}

TEST(Simulation, CapacityRemovesMassAboveLimit) {
  const SimModel model = mm1(10.0);
  const StationaryHistogram hist = estimate_stationary_histogram(
      model, RewardFunction::constant(1.0), {0.0, 5.0, 10.0, 15.0}, 20000, 8);
  EXPECT_EQ(hist.cells(), 4);
  EXPECT_EQ(hist.cell(3).point, 0.0);
  double total = 0.0;
  for (int k = 0; k < hist.cells(); ++k) total += hist.cell(k).point;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_GT(hist.cell(0).point, 0.5);  // blocking only makes the queue idler.
  const RegenerativeEstimate comb = hist.combination({1.0, 1.0, 1.0, 1.0});
  EXPECT_NEAR(comb.point, 1.0, 1e-12);
}

TEST(Simulation, WorkloadNeverExceedsCapacity) {
  const SimModel model = mm1(3.0);
  for (int r = 0; r < 200; ++r) {
    RandomStream s = RandomStream::derived(9, r);
    EXPECT_LE(simulate_until(model, {0.0, 0}, 50.0, s).w, 3.0);
  }
}

TEST(Simulation, MapArrivalRate) {
  const SimModel model = SimModel::from_map(mmpp(), ServiceLaw::exponential(2.0), 0);
  const RegenerativeEstimate rate = estimate_arrival_rate(model, 50000, 13);
  EXPECT_NEAR(rate.point, 1.0, 3.5 * rate.std_error);
  const RegenerativeEstimate idle =
      estimate_pi_g(model, RewardFunction::zero_indicator(), 50000, 14);
  EXPECT_NEAR(idle.point, 0.5, 3.5 * idle.std_error);
}

TEST(Simulation, UnstableModelExplodes) {
  SimModel model = SimModel::mg1(1.5, ServiceLaw::exponential(1.0));
  model.cycle_cap = 1e3;
  RandomStream s(1);
  try {
    simulate_cycle(model, {5.0, 0}, {}, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExplodedCycle);
  }
}

TEST(Simulation, RejectsBadArguments) {
  EXPECT_THROW(estimate_pi_g(mm1(), RewardFunction::constant(1.0), 10, 1), Error);
  RandomStream s(1);
  EXPECT_THROW(simulate_cycle(mm1(3.0), {4.0, 0}, {}, s), Error);
  EXPECT_THROW(simulate_cycle(mm1(), {1.0, 1}, {}, s), Error);
}

}  // namespace
}  // namespace pbound
