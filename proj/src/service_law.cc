#include "pbound/service_law.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
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

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " must be positive and finite");
  }
}

QuadOptions tight() {
  QuadOptions q;
  q.abs_tol = 1e-14;
  q.rel_tol = 1e-12;
  return q;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::derived(std::uint64_t seed, std::uint64_t index) {
  return RandomStream(splitmix64(splitmix64(seed) ^ splitmix64(index + 1)));
}

ServiceLaw::ServiceLaw(Family family) : family_(std::move(family)) {
  mean_ = std::visit(
      Overloaded{
          [](const Exponential& e) {
            require_positive(e.rate, "exponential rate");
            return 1.0 / e.rate;
          },
          [](const Erlang& e) {
            if (e.k < 1) {
              throw Error(ErrorCode::kInvalidArgument, "Erlang k must be >= 1");
            }
            require_positive(e.rate, "Erlang rate");
            return e.k / e.rate;
          },
          [](const HyperExponential& h) {
            if (h.probs.empty() || h.probs.size() != h.rates.size()) {
              throw Error(ErrorCode::kInvalidArgument,
                          "hyperexponential needs matching probs and rates");
            }
            double total = 0.0, m = 0.0;
            for (std::size_t i = 0; i < h.probs.size(); ++i) {
              require_positive(h.probs[i], "hyperexponential probability");
              require_positive(h.rates[i], "hyperexponential rate");
              total += h.probs[i];
              m += h.probs[i] / h.rates[i];
            }
            if (std::abs(total - 1.0) > 1e-12) {
              throw Error(ErrorCode::kInvalidArgument,
                          "hyperexponential probabilities must sum to 1");
            }
            return m;
          },
          [](const Deterministic& d) {
            require_positive(d.value, "deterministic service time");
            return d.value;
          },
          [](const WeibullTail& w) {
            require_positive(w.scale, "Weibull scale");
            if (!(w.shape > 0.0 && w.shape < 1.0)) {
              throw Error(ErrorCode::kInvalidArgument,
                          "Weibull shape must lie in (0, 1)");
            }
            return w.scale * std::tgamma(1.0 + 1.0 / w.shape);
          },
          [](const ParetoTail& p) {
            require_positive(p.scale, "Pareto scale");
            if (!(p.shape > 1.0) || !std::isfinite(p.shape)) {
              throw Error(ErrorCode::kInvalidArgument,
                          "Pareto shape must exceed 1 for a finite mean");
            }
            return p.scale / (p.shape - 1.0);
          },
      },
      family_);
}

std::string ServiceLaw::name() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const Exponential& e) { os << "Exponential(" << e.rate << ")"; },
                 [&](const Erlang& e) { os << "Erlang(" << e.k << "," << e.rate << ")"; },
                 [&](const HyperExponential& h) {
                   os << "HyperExponential(" << h.probs.size() << " branches)";
                 },
                 [&](const Deterministic& d) { os << "Deterministic(" << d.value << ")"; },
                 [&](const WeibullTail& w) {
                   os << "WeibullTail(" << w.shape << "," << w.scale << ")";
                 },
                 [&](const ParetoTail& p) {
                   os << "ParetoTail(" << p.shape << "," << p.scale << ")";
                 },
             },
             family_);
  return os.str();
}

double ServiceLaw::mean() const { return mean_; }

double ServiceLaw::tail(double x) const {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return std::visit(
      Overloaded{
          [x](const Exponential& e) { return std::exp(-e.rate * x); },
          [x](const Erlang& e) {
            const double mx = e.rate * x;
            double term = 1.0, sum = 1.0;
            for (int j = 1; j < e.k; ++j) {
              term *= mx / j;
              sum += term;
            }
            return std::min(1.0, std::exp(-mx + std::log(sum)));
          },
          [x](const HyperExponential& h) {
            double s = 0.0;
            for (std::size_t i = 0; i < h.probs.size(); ++i) {
              s += h.probs[i] * std::exp(-h.rates[i] * x);
            }
            return s;
          },
          [x](const Deterministic& d) { return x < d.value ? 1.0 : 0.0; },
          [x](const WeibullTail& w) {
            return std::exp(-std::pow(x / w.scale, w.shape));
          },
          [x](const ParetoTail& p) {
            return std::pow(1.0 + x / p.scale, -p.shape);
          },
      },
      family_);
}

double ServiceLaw::mgf_abscissa() const {
  return std::visit(
      Overloaded{
          [](const Exponential& e) { return e.rate; },
          [](const Erlang& e) { return e.rate; },
          [](const HyperExponential& h) {
            return *std::min_element(h.rates.begin(), h.rates.end());
          },
          [](const Deterministic&) { return kInf; },
          [](const WeibullTail&) { return 0.0; },
          [](const ParetoTail&) { return 0.0; },
      },
      family_);
}

double ServiceLaw::mgf(double theta) const {
  if (std::isnan(theta)) {
    throw Error(ErrorCode::kInvalidArgument, "theta is NaN");
  }
  if (theta == 0.0) return 1.0;
  const double bar = mgf_abscissa();
  if (bar > 0.0 ? !(theta < bar) : theta > 0.0) {
    throw Error(ErrorCode::kOutsideDomain,
                "theta = " + std::to_string(theta) + " outside the MGF domain of " +
                    name());
  }
  return std::visit(
      Overloaded{
          [theta](const Exponential& e) { return e.rate / (e.rate - theta); },
          [theta](const Erlang& e) {
            return std::pow(e.rate / (e.rate - theta), e.k);
          },
          [theta](const HyperExponential& h) {
            double s = 0.0;
            for (std::size_t i = 0; i < h.probs.size(); ++i) {
              s += h.probs[i] * h.rates[i] / (h.rates[i] - theta);
            }
            return s;
          },
          [theta](const Deterministic& d) { return std::exp(theta * d.value); },
          [this, theta](const auto&) {
            // E e^{theta S} = 1 + theta int_0^inf e^{theta y} H-bar(y) dy, theta < 0.
            const auto r = integrate_to_infinity(
                [this, theta](double y) { return std::exp(theta * y) * tail(y); },
                0.0, tight());
            return 1.0 + theta * r.value;
          },
      },
      family_);
}

std::vector<double> ServiceLaw::breakpoints() const {
  if (const auto* d = std::get_if<Deterministic>(&family_)) return {d->value};
  return {};
}

namespace {

// int_lo^hi H-bar(y) w(y) dy with the range split at the tail's jumps.
QuadResult tail_piece(const ServiceLaw& law, const Integrand& w, double lo, double hi,
                      const QuadOptions& opts) {
  QuadResult out;
  const Integrand integrand = [&](double y) {
    const double t = law.tail(y);
    return t == 0.0 ? 0.0 : t * w(y);
  };
  std::vector<double> cuts;
  for (double bp : law.breakpoints()) {
    if (bp > lo && bp < hi) cuts.push_back(bp);
  }
  cuts.push_back(hi);
  double a = lo;
  for (double cut : cuts) {
    const QuadResult r = std::isinf(cut) ? integrate_to_infinity(integrand, a, opts)
                                         : integrate(integrand, a, cut, opts);
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
    out.converged = out.converged && r.converged;
    a = cut;
  }
  return out;
}

}  // namespace

QuadResult integrate_against_tail(const ServiceLaw& law, const Integrand& w, double a,
                                  const QuadOptions& opts) {
  return tail_piece(law, w, std::max(a, 0.0), kInf, opts);
}

double ServiceLaw::equilibrium_cdf(double x) const {
  if (x <= 0.0) return 0.0;
  const double total =
      tail_piece(*this, [](double) { return 1.0; }, 0.0, x, tight()).value;
  return std::min(1.0, total / mean_);
}

double ServiceLaw::sample(RandomStream& stream) const {
  return std::visit(
      Overloaded{
          [&](const Exponential& e) { return stream.exponential(e.rate); },
          [&](const Erlang& e) {
            double s = 0.0;
            for (int j = 0; j < e.k; ++j) s += stream.exponential(e.rate);
            return s;
          },
          [&](const HyperExponential& h) {
            const double u = stream.uniform();
            double acc = 0.0;
            std::size_t i = 0;
            for (; i + 1 < h.probs.size(); ++i) {
              acc += h.probs[i];
              if (u < acc) break;
            }
            return stream.exponential(h.rates[i]);
          },
          [&](const Deterministic& d) { return d.value; },
          [&](const WeibullTail& w) {
            return w.scale * std::pow(-std::log(stream.uniform()), 1.0 / w.shape);
          },
          [&](const ParetoTail& p) {
            return p.scale * (std::pow(stream.uniform(), -1.0 / p.shape) - 1.0);
          },
      },
      family_);
}

double envelope_value(const TailEnvelope& env, double x) {
  return std::visit(
      Overloaded{
          [x](const LightTailEnvelope& e) { return e.constant * std::exp(-e.rate * x); },
          [x](const ModerateEnvelope& e) {
            return e.constant * std::exp(-e.gamma * std::pow(x, e.beta));
          },
          [x](const PolynomialEnvelope& e) {
            return e.constant * std::pow(x + 1.0, -e.kappa);
          },
      },
      env);
}

std::string envelope_name(const TailEnvelope& env) {
  return std::visit(Overloaded{
                        [](const LightTailEnvelope&) { return std::string("light"); },
                        [](const ModerateEnvelope&) { return std::string("moderate"); },
                        [](const PolynomialEnvelope&) { return std::string("polynomial"); },
                    },
                    env);
}

void validate_envelope(const TailEnvelope& env) {
  std::visit(Overloaded{
                 [](const LightTailEnvelope& e) {
                   require_positive(e.constant, "envelope constant");
                   require_positive(e.rate, "envelope rate");
                 },
                 [](const ModerateEnvelope& e) {
                   require_positive(e.constant, "envelope constant");
                   require_positive(e.gamma, "envelope gamma");
                   if (!(e.beta > 0.0 && e.beta < 1.0)) {
                     throw Error(ErrorCode::kInvalidArgument,
                                 "envelope beta must lie in (0, 1)");
                   }
                 },
                 [](const PolynomialEnvelope& e) {
                   require_positive(e.constant, "envelope constant");
                   if (!(e.kappa > 1.0)) {
                     throw Error(ErrorCode::kInvalidArgument,
                                 "envelope kappa must exceed 1");
                   }
                 },
             },
             env);
}

std::vector<double> make_grid(const GridSpec& spec) {
  if (!(spec.x_hi > 0.0) || spec.n_linear < 1 || spec.n_geometric < 0) {
    throw Error(ErrorCode::kInvalidArgument, "bad grid specification");
  }
  std::vector<double> grid{0.0};
  double start = 0.0;
  if (spec.n_geometric > 0) {
    if (!(spec.x_min > 0.0 && spec.x_min < spec.x_split && spec.x_split < spec.x_hi)) {
      throw Error(ErrorCode::kInvalidArgument, "bad geometric grid segment");
    }
    const double ratio = std::log(spec.x_split / spec.x_min);
    for (int i = 0; i < spec.n_geometric; ++i) {
      const double frac = spec.n_geometric == 1
                              ? 0.0
                              : static_cast<double>(i) / (spec.n_geometric - 1);
      grid.push_back(spec.x_min * std::exp(ratio * frac));
    }
    start = spec.x_split;
  }
  const double h = (spec.x_hi - start) / spec.n_linear;
  for (int i = 1; i <= spec.n_linear; ++i) {
    const double x = i == spec.n_linear ? spec.x_hi : start + h * i;
    if (x > grid.back()) grid.push_back(x);
  }
  return grid;
}

EnvelopeVerdict verify_envelope(const ServiceLaw& law, const TailEnvelope& env,
                                GridSpec grid) {
  validate_envelope(env);
  grid.x_hi = std::max(grid.x_hi, 50.0 * law.mean());
  EnvelopeVerdict v;
  v.worst_excess = -kInf;
  for (double x : make_grid(grid)) {
    const double bar = law.tail(x);
    const double e = envelope_value(env, x);
    const double excess = bar - e;
    if (excess > v.worst_excess) {
      v.worst_excess = excess;
      v.worst_x = x;
    }
    // Relative slack so that an envelope equal to the tail is accepted.
    if (bar > e * (1.0 + 1e-12)) v.holds = false;
    ++v.points;
  }
  return v;
}

EquilibriumGrid::EquilibriumGrid(double x_hi, std::vector<std::vector<double>> tables,
                                 double error_estimate)
    : x_hi_(x_hi),
      step_(x_hi / static_cast<double>(tables.front().size() - 1)),
      tables_(std::move(tables)),
      error_estimate_(error_estimate) {}

double EquilibriumGrid::value(int n, double x) const {
  const auto& t = tables_.at(n);
  if (x <= 0.0) return t.front();
  if (x >= x_hi_) return t.back();
  const double pos = x / step_;
  const auto k = static_cast<std::size_t>(pos);
  if (k + 1 >= t.size()) return t.back();
  const double w = pos - static_cast<double>(k);
  return (1.0 - w) * t[k] + w * t[k + 1];
}

void EquilibriumGrid::write_csv(std::ostream& out) const {
  out << "x,n,value\n";
  out.precision(17);
  for (std::size_t n = 0; n < tables_.size(); ++n) {
    for (std::size_t k = 0; k < tables_[n].size(); ++k) {
      out << node(static_cast<int>(k)) << ',' << n << ',' << tables_[n][k] << '\n';
    }
  }
}

namespace {

// Convolution powers on the uniform grid with `cells` cells. `increments[j]`
// is H_re(x_{j+1}) - H_re(x_j).
std::vector<std::vector<double>> convolution_powers(
    const std::vector<double>& increments, int n_max) {
  const std::size_t nodes = increments.size() + 1;
  std::vector<std::vector<double>> tables;
  tables.emplace_back(nodes, 1.0);
  for (int n = 1; n <= n_max; ++n) {
    const auto& prev = tables.back();
    std::vector<double> next(nodes, 0.0);
    for (std::size_t k = 1; k < nodes; ++k) {
      double s = 0.0;
      // x_k - y_j = x_{k-j}.
      for (std::size_t j = 0; j < k; ++j) {
        s += 0.5 * (prev[k - j] + prev[k - j - 1]) * increments[j];
      }
      next[k] = std::min(s, prev[k]);
    }
    tables.push_back(std::move(next));
  }
  return tables;
}

}  // namespace

EquilibriumGrid equilibrium_tables(const ServiceLaw& law, int n_max, double x_hi,
                                   const EquilibriumOptions& opts) {
  if (n_max < 0 || !(x_hi > 0.0) || opts.cells < 2) {
    throw Error(ErrorCode::kInvalidArgument, "bad equilibrium table request");
  }
  const int cells = opts.cells + (opts.cells % 2);
  const double h = x_hi / cells;
  std::vector<double> cdf(cells + 1, 0.0);
  const Integrand one = [](double) { return 1.0; };
  for (int k = 1; k <= cells; ++k) {
    const double cell = tail_piece(law, one, h * (k - 1), h * k, tight()).value;
    cdf[k] = std::min(1.0, cdf[k - 1] + cell / law.mean());
  }
  std::vector<double> increments(cells);
  for (int k = 0; k < cells; ++k) {
    increments[k] = std::max(0.0, cdf[k + 1] - cdf[k]);
  }
  auto tables = convolution_powers(increments, n_max);

  double error = 0.0;
  if (n_max >= 2) {
    // Self-check: the second power recomputed on the half-resolution grid.
    std::vector<double> coarse_inc(cells / 2);
    for (int k = 0; k < cells / 2; ++k) coarse_inc[k] = cdf[2 * k + 2] - cdf[2 * k];
    const auto coarse = convolution_powers(coarse_inc, 2);
    for (int k = 0; k <= cells / 2; ++k) {
      error = std::max(error, std::abs(coarse[2][k] - tables[2][2 * k]) / 3.0);
    }
    if (error > opts.max_error) {
      throw Error(ErrorCode::kGridTooCoarse,
                  "convolution error estimate " + std::to_string(error) +
                      " exceeds " + std::to_string(opts.max_error));
    }
  }
  return EquilibriumGrid(x_hi, std::move(tables), error);
}

}  // namespace pbound
