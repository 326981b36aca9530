#include "pbound/regen_sim.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pbound/error.h"
#include "pbound/quadrature.h"

namespace pbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Accumulator {
  double n = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double v) {
    n += 1.0;
    sum += v;
    sum_sq += v * v;
  }
  double mean() const { return sum / n; }
  double variance() const {
    if (n < 2.0) return 0.0;
    const double m = mean();
    return std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
  }
};

// Ratio sum(y) / sum(tau) with the delta-method standard error.
RegenerativeEstimate ratio_estimate(const std::vector<double>& y,
                                    const std::vector<double>& tau, std::uint64_t seed) {
  RegenerativeEstimate out;
  out.n = y.size();
  out.seed = seed;
  double sy = 0.0, st = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    sy += y[r];
    st += tau[r];
  }
  out.point = sy / st;
  double ss = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    const double z = y[r] - out.point * tau[r];
    ss += z * z;
  }
  const double n = static_cast<double>(y.size());
  const double mean_tau = st / n;
  out.std_error = n > 1.0 ? std::sqrt(ss / (n - 1.0) / n) / mean_tau : 0.0;
  return out;
}

void require_model(const SimModel& model) {
  require_square_finite(model.c, "C");
  require_square_finite(model.d, "D");
  if (model.c.rows() != model.d.rows()) {
    throw Error(ErrorCode::kInvalidShape, "C and D differ in dimension");
  }
  if (model.i0 < 0 || model.i0 >= model.phases()) {
    throw Error(ErrorCode::kInvalidArgument, "atom phase out of range");
  }
  if (!(model.capacity > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "capacity must be positive");
  }
  for (int i = 0; i < model.phases(); ++i) {
    if (!(model.c(i, i) < 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "C has a nonnegative diagonal entry");
    }
  }
}

void require_state(const SimModel& model, const WorkloadState& s) {
  if (!(s.w >= 0.0) || !std::isfinite(s.w) || s.w > model.capacity) {
    throw Error(ErrorCode::kInvalidArgument, "start workload outside [0, L]");
  }
  if (s.phase < 0 || s.phase >= model.phases()) {
    throw Error(ErrorCode::kInvalidArgument, "start phase out of range");
  }
}

bool in_atom(const SimModel& model, const WorkloadState& s) {
  return s.w <= 0.0 && s.phase == model.i0;
}

// Applies one phase event to the state; returns true for an arrival.
bool apply_event(const SimModel& model, WorkloadState& s, RandomStream& stream) {
  const int m = model.phases();
  const int i = s.phase;
  const double total = -model.c(i, i);
  const double u = stream.uniform() * total;
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    if (j == i) continue;
    acc += model.c(i, j);
    if (u < acc) {
      s.phase = j;
      return false;
    }
  }
  int last = -1;
  for (int j = 0; j < m; ++j) {
    if (model.d(i, j) <= 0.0) continue;
    last = j;
    acc += model.d(i, j);
    if (u < acc) break;
  }
  if (last < 0) {
    // Rounding pushed u past every rate; the last C entry takes it.
    for (int j = m - 1; j >= 0; --j) {
      if (j != i && model.c(i, j) > 0.0) {
        s.phase = j;
        return false;
      }
    }
    return false;
  }
  const double service = model.law.sample(stream);
  if (s.w + service <= model.capacity) s.w += service;
  s.phase = last;
  return true;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

SimModel SimModel::from_map(const MarkovArrivalProcess& map, const ServiceLaw& law,
                            int i0) {
  SimModel m{.c = map.c(), .d = map.d(), .law = law};
  m.i0 = i0;
  require_model(m);
  return m;
}

SimModel SimModel::mg1(double lambda, const ServiceLaw& law, double capacity) {
  const MarkovArrivalProcess map = MarkovArrivalProcess::poisson(lambda);
  SimModel m{.c = map.c(), .d = map.d(), .law = law};
  m.capacity = capacity;
  require_model(m);
  return m;
}

RewardFunction RewardFunction::constant(double c) {
  return {[c](int) { return c; },
          [c](double lo, double hi, int) { return c * (hi - lo); }};
}

RewardFunction RewardFunction::exponential(double c, double theta, Vector u) {
  if (!(theta != 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "exponential reward needs theta != 0");
  }
  return {[c, u](int i) { return c * u(i); },
          [c, theta, u](double lo, double hi, int i) {
            return c * u(i) * (std::exp(theta * hi) - std::exp(theta * lo)) / theta;
          }};
}

RewardFunction RewardFunction::certificate_f(const DriftCertificate& cert) {
  return {[cert](int i) { return cert.f(0.0, i); },
          [cert](double lo, double hi, int i) { return cert.f_integral(lo, hi, i); }};
}

RewardFunction RewardFunction::zero_indicator(std::vector<int> phases) {
  return {[phases](int i) {
            return phases.empty() || std::find(phases.begin(), phases.end(), i) != phases.end()
                       ? 1.0
                       : 0.0;
          },
          [](double, double, int) { return 0.0; }};
}

RewardFunction RewardFunction::restricted(RewardFunction g, double lo, double hi) {
  const bool has_zero = lo < 0.0 && 0.0 <= hi;
  return {[g, has_zero](int i) { return has_zero ? g.at_zero(i) : 0.0; },
          [g, lo, hi](double a, double b, int i) {
            const double x = std::max(a, lo);
            const double y = std::min(b, hi);
            return y > x ? g.decay_integral(x, y, i) : 0.0;
          }};
}

RewardFunction RewardFunction::custom(std::function<double(double, int)> g) {
  return {[g](int i) { return g(0.0, i); },
          [g](double lo, double hi, int i) {
            return integrate([&g, i](double y) { return g(y, i); }, lo, hi).value;
          }};
}

CycleRecord simulate_cycle(const SimModel& model, WorkloadState start,
                           std::span<const RewardFunction> rewards, RandomStream& stream,
                           double probe_t) {
  require_state(model, start);
  CycleRecord rec;
  rec.integrals.assign(rewards.size(), 0.0);
  WorkloadState s = start;
  bool armed = !in_atom(model, s);
  double t = 0.0;
  auto idle = [&](double dt) {
    for (std::size_t k = 0; k < rewards.size(); ++k) {
      rec.integrals[k] += rewards[k].at_zero(s.phase) * dt;
    }
    rec.occupation_c += dt;
    t += dt;
  };
  auto decay = [&](double dt) {
    for (std::size_t k = 0; k < rewards.size(); ++k) {
      rec.integrals[k] += rewards[k].decay_integral(s.w - dt, s.w, s.phase);
    }
    s.w -= dt;
    t += dt;
  };
  auto finish = [&]() {
    rec.tau = t;
    rec.g_integral = rec.integrals.empty() ? 0.0 : rec.integrals.front();
    rec.hit_alpha_by_t = t <= probe_t;
    return rec;
  };
  while (true) {
    double dt = stream.exponential(-model.c(s.phase, s.phase));
    if (s.w > 0.0) {
      if (dt < s.w) {
        decay(dt);
        dt = 0.0;
      } else {
        const double busy = s.w;
        decay(busy);
        s.w = 0.0;
        dt -= busy;
        if (armed && s.phase == model.i0) return finish();
      }
    }
    if (dt > 0.0) idle(dt);
    if (t > model.cycle_cap) {
      throw Error(ErrorCode::kExplodedCycle,
                  "path exceeded " + fmt(model.cycle_cap) + " time units");
    }
    if (apply_event(model, s, stream)) ++rec.arrivals;
    if (in_atom(model, s)) {
      if (armed) return finish();
    } else {
      armed = true;
    }
  }
}

WorkloadState simulate_until(const SimModel& model, WorkloadState start, double t,
                             RandomStream& stream) {
  require_state(model, start);
  if (!(t >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "time must be nonnegative");
  WorkloadState s = start;
  double now = 0.0;
  while (true) {
    const double dt = stream.exponential(-model.c(s.phase, s.phase));
    if (now + dt >= t) {
      s.w = std::max(0.0, s.w - (t - now));
      return s;
    }
    now += dt;
    s.w = std::max(0.0, s.w - dt);
    apply_event(model, s, stream);
  }
}

RegenerativeEstimate estimate_pi_g(const SimModel& model, const RewardFunction& g,
                                   std::uint64_t n_cycles, std::uint64_t seed) {
  if (n_cycles < 100) {
    throw Error(ErrorCode::kInvalidArgument, "at least 100 cycles are required");
  }
  std::vector<double> y(n_cycles), tau(n_cycles);
  const WorkloadState atom{0.0, model.i0};
  for (std::uint64_t r = 0; r < n_cycles; ++r) {
    RandomStream stream = RandomStream::derived(seed, r);
    const CycleRecord rec = simulate_cycle(model, atom, std::span(&g, 1), stream);
    y[r] = rec.g_integral;
    tau[r] = rec.tau;
  }
  return ratio_estimate(y, tau, seed);
}

namespace {

RegenerativeEstimate centered_paths(const SimModel& model, const RewardFunction& g,
                                    WorkloadState start, std::uint64_t n_reps,
                                    const RegenerativeEstimate& pi_g, std::uint64_t seed) {
  if (n_reps < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 replications");
  Accumulator d, tau;
  for (std::uint64_t r = 0; r < n_reps; ++r) {
    RandomStream stream = RandomStream::derived(seed, r);
    const CycleRecord rec = simulate_cycle(model, start, std::span(&g, 1), stream);
    d.add(rec.g_integral - pi_g.point * rec.tau);
    tau.add(rec.tau);
  }
  RegenerativeEstimate out;
  out.n = n_reps;
  out.seed = seed;
  out.point = d.mean();
  const double mt = tau.mean();
  out.std_error =
      std::sqrt(d.variance() / d.n + mt * mt * pi_g.std_error * pi_g.std_error);
  return out;
}

}  // namespace

RegenerativeEstimate estimate_h(const SimModel& model, const RewardFunction& g,
                                WorkloadState start, std::uint64_t n_reps,
                                const RegenerativeEstimate& pi_g, std::uint64_t seed) {
  require_state(model, start);
  if (in_atom(model, start)) {
    RegenerativeEstimate out;
    out.n = n_reps;
    out.seed = seed;
    return out;
  }
  return centered_paths(model, g, start, n_reps, pi_g, seed);
}

RegenerativeEstimate estimate_h_return_form(const SimModel& model, const RewardFunction& g,
                                            WorkloadState start, std::uint64_t n_reps,
                                            const RegenerativeEstimate& pi_g,
                                            std::uint64_t seed) {
  return centered_paths(model, g, start, n_reps, pi_g, seed);
}

RegenerativeEstimate estimate_return_probability(const SimModel& model, int phase, double t,
                                                 std::uint64_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one path");
  std::uint64_t hits = 0;
  for (std::uint64_t r = 0; r < n; ++r) {
    RandomStream stream = RandomStream::derived(seed, r);
    if (in_atom(model, simulate_until(model, {0.0, phase}, t, stream))) ++hits;
  }
  RegenerativeEstimate out;
  out.n = n;
  out.seed = seed;
  out.point = static_cast<double>(hits) / static_cast<double>(n);
  out.std_error = std::sqrt(out.point * (1.0 - out.point) / static_cast<double>(n));
  return out;
}

RegenerativeEstimate estimate_occupation(const SimModel& model, WorkloadState start,
                                         std::uint64_t n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 replications");
  Accumulator occ;
  for (std::uint64_t r = 0; r < n; ++r) {
    RandomStream stream = RandomStream::derived(seed, r);
    occ.add(simulate_cycle(model, start, {}, stream).occupation_c);
  }
  RegenerativeEstimate out;
  out.n = n;
  out.seed = seed;
  out.point = occ.mean();
  out.std_error = std::sqrt(occ.variance() / occ.n);
  return out;
}

RegenerativeEstimate estimate_arrival_rate(const SimModel& model, std::uint64_t n_cycles,
                                           std::uint64_t seed) {
  if (n_cycles < 100) {
    throw Error(ErrorCode::kInvalidArgument, "at least 100 cycles are required");
  }
  std::vector<double> y(n_cycles), tau(n_cycles);
  for (std::uint64_t r = 0; r < n_cycles; ++r) {
    RandomStream stream = RandomStream::derived(seed, r);
    const CycleRecord rec = simulate_cycle(model, {0.0, model.i0}, {}, stream);
    y[r] = static_cast<double>(rec.arrivals);
    tau[r] = rec.tau;
  }
  return ratio_estimate(y, tau, seed);
}

StationaryHistogram::StationaryHistogram(std::vector<double> edges,
                                         std::vector<std::vector<double>> per_cycle,
                                         std::vector<double> taus, std::uint64_t seed)
    : edges_(std::move(edges)),
      per_cycle_(std::move(per_cycle)),
      taus_(std::move(taus)),
      seed_(seed) {}

RegenerativeEstimate StationaryHistogram::cell(int k) const {
  std::vector<double> coeffs(cells(), 0.0);
  coeffs.at(k) = 1.0;
  return combination(coeffs);
}

RegenerativeEstimate StationaryHistogram::combination(const std::vector<double>& coeffs) const {
  if (static_cast<int>(coeffs.size()) != cells()) {
    throw Error(ErrorCode::kInvalidShape, "coefficient count differs from cell count");
  }
  std::vector<double> y(taus_.size(), 0.0);
  for (std::size_t r = 0; r < taus_.size(); ++r) {
    for (int k = 0; k < cells(); ++k) y[r] += coeffs[k] * per_cycle_[r][k];
  }
  return ratio_estimate(y, taus_, seed_);
}

StationaryHistogram estimate_stationary_histogram(const SimModel& model,
                                                  const RewardFunction& g,
                                                  std::vector<double> edges,
                                                  std::uint64_t n_cycles,
                                                  std::uint64_t seed) {
  if (n_cycles < 100) {
    throw Error(ErrorCode::kInvalidArgument, "at least 100 cycles are required");
  }
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) || edges.front() < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "bin edges must be sorted and nonnegative");
  }
  std::vector<RewardFunction> rewards;
  rewards.push_back(RewardFunction::restricted(g, -kInf, 0.0));
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    rewards.push_back(RewardFunction::restricted(g, edges[k], edges[k + 1]));
  }
  std::vector<std::vector<double>> per_cycle(n_cycles);
  std::vector<double> taus(n_cycles);
  for (std::uint64_t r = 0; r < n_cycles; ++r) {
    RandomStream stream = RandomStream::derived(seed, r);
    CycleRecord rec = simulate_cycle(model, {0.0, model.i0}, rewards, stream);
    per_cycle[r] = std::move(rec.integrals);
    taus[r] = rec.tau;
  }
  return StationaryHistogram(std::move(edges), std::move(per_cycle), std::move(taus), seed);
}

}  // namespace pbound
