#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "pbound/quadrature.h"

namespace pbound {

/// Seeded pseudo-random stream. Every draw goes through uniform(), so a
/// sequence is reproducible from the seed alone.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Stream for replication `index` of a run seeded with `seed`.
  static RandomStream derived(std::uint64_t seed, std::uint64_t index);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

struct Exponential {
  double rate;
};
/// Sum of k exponential phases with the given per-phase rate.
struct Erlang {
  int k;
  double rate;
};
struct HyperExponential {
  std::vector<double> probs;
  std::vector<double> rates;
};
struct Deterministic {
  double value;
};
/// Tail exp(-(x / scale)^shape) with shape in (0, 1).
struct WeibullTail {
  double shape;
  double scale;
};
/// Tail (1 + x / scale)^(-shape) with shape > 1.
struct ParetoTail {
  double shape;
  double scale;
};

/// Service-time distribution H on (0, inf) with H(0) = 0 and finite mean.
class ServiceLaw {
 public:
  using Family = std::variant<Exponential, Erlang, HyperExponential,
                              Deterministic, WeibullTail, ParetoTail>;

  /// Validates parameters; throws InvalidArgument.
  explicit ServiceLaw(Family family);

  static ServiceLaw exponential(double rate) { return ServiceLaw(Exponential{rate}); }
  static ServiceLaw erlang(int k, double rate) { return ServiceLaw(Erlang{k, rate}); }
  static ServiceLaw hyperexponential(std::vector<double> probs,
                                     std::vector<double> rates) {
    return ServiceLaw(HyperExponential{std::move(probs), std::move(rates)});
  }
  static ServiceLaw deterministic(double value) { return ServiceLaw(Deterministic{value}); }
  static ServiceLaw weibull_tail(double shape, double scale) {
    return ServiceLaw(WeibullTail{shape, scale});
  }
  static ServiceLaw pareto_tail(double shape, double scale) {
    return ServiceLaw(ParetoTail{shape, scale});
  }

  const Family& family() const { return family_; }
  std::string name() const;

  double mean() const;
  /// H-bar(x) = P(S > x); equals 1 for x <= 0.
  double tail(double x) const;
  double cdf(double x) const { return 1.0 - tail(x); }

  /// sup{theta >= 0 : E e^{theta S} < inf}; +inf for bounded laws.
  double mgf_abscissa() const;
  bool light_tailed() const { return mgf_abscissa() > 0.0; }

  /// E e^{theta S}; throws OutsideDomain unless theta < mgf_abscissa() (for
  /// heavy-tailed families that means theta <= 0).
  double mgf(double theta) const;

  /// Points where the tail jumps; integrals of the tail split there.
  std::vector<double> breakpoints() const;

  /// Equilibrium (integrated-tail) distribution mu * int_0^x H-bar(y) dy.
  double equilibrium_cdf(double x) const;

  double sample(RandomStream& stream) const;

 private:
  Family family_;
  double mean_ = 0.0;
};

/// int_a^inf H-bar(y) w(y) dy, split at the jump points of the tail.
QuadResult integrate_against_tail(const ServiceLaw& law, const Integrand& w, double a,
                                  const QuadOptions& opts = {});

struct LightTailEnvelope {
  double constant;
  double rate;
};
/// C exp(-gamma x^beta).
struct ModerateEnvelope {
  double constant;
  double gamma;
  double beta;
};
/// C (x + 1)^(-kappa).
struct PolynomialEnvelope {
  double constant;
  double kappa;
};

using TailEnvelope =
    std::variant<LightTailEnvelope, ModerateEnvelope, PolynomialEnvelope>;

double envelope_value(const TailEnvelope& env, double x);
std::string envelope_name(const TailEnvelope& env);
/// Throws InvalidArgument for nonpositive constants, beta outside (0, 1) or
/// kappa <= 1.
void validate_envelope(const TailEnvelope& env);

/// Grid on [0, x_hi]: zero, then n_geometric points spaced geometrically on
/// [x_min, x_split], then n_linear equal steps up to x_hi.
struct GridSpec {
  double x_hi = 100.0;
  int n_linear = 2000;
  int n_geometric = 0;
  double x_min = 1e-6;
  double x_split = 1.0;
};

std::vector<double> make_grid(const GridSpec& spec);

struct EnvelopeVerdict {
  bool holds = true;
  /// Largest H-bar(x) - env(x) over the grid and where it occurs.
  double worst_excess = 0.0;
  double worst_x = 0.0;
  int points = 0;
};

/// Compares the tail with the envelope on the grid. The grid is stretched to
/// at least 50 mean service times.
EnvelopeVerdict verify_envelope(const ServiceLaw& law, const TailEnvelope& env,
                                GridSpec grid = {});

/// Tables of the convolution powers H_re^{*n}, n = 0..n_max, on a uniform
/// grid over [0, x_hi].
class EquilibriumGrid {
 public:
  EquilibriumGrid(double x_hi, std::vector<std::vector<double>> tables,
                  double error_estimate);

  int n_max() const { return static_cast<int>(tables_.size()) - 1; }
  int cells() const { return static_cast<int>(tables_.front().size()) - 1; }
  double step() const { return step_; }
  double x_hi() const { return x_hi_; }
  double node(int k) const { return step_ * k; }
  const std::vector<double>& table(int n) const { return tables_.at(n); }
  /// Linear interpolation of H_re^{*n} on [0, x_hi].
  double value(int n, double x) const;
  /// Richardson-style discretization error estimate from the self-check.
  double error_estimate() const { return error_estimate_; }

  /// CSV with header x,n,value.
  void write_csv(std::ostream& out) const;

 private:
  double x_hi_;
  double step_;
  std::vector<std::vector<double>> tables_;
  double error_estimate_;
};

struct EquilibriumOptions {
  int cells = 2000;
  /// GridTooCoarse is raised if the self-check estimate exceeds this.
  double max_error = 1e-4;
};

/// H_re by quadrature on each cell, then H_re^{*n} by the Stieltjes
/// convolution F_n(x) = int_0^x F_{n-1}(x - y) dH_re(y), trapezoidal in the
/// integrator increments.
EquilibriumGrid equilibrium_tables(const ServiceLaw& law, int n_max, double x_hi,
                                   const EquilibriumOptions& opts = {});

}  // namespace pbound
