#include "pbound/quadrature.h"

#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace pbound {

namespace {

// Kronrod abscissae on [0, 1) of the symmetric rule; odd indices are the
// embedded 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
  double a, b, value, error;
  bool operator<(const Piece& other) const { return error < other.error; }
};

Piece gauss_kronrod(const Integrand& f, double a, double b, bool& finite) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * pair;
    if (j % 2 == 1) gauss += kWg[j / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  if (!std::isfinite(kronrod)) finite = false;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

QuadResult integrate(const Integrand& f, double a, double b,
                     const QuadOptions& opts) {
  QuadResult out;
  if (a == b) return out;
  bool finite = true;
  std::priority_queue<Piece> heap;
  Piece first = gauss_kronrod(f, a, b, finite);
  out.evaluations = 15;
  double total = first.value;
  double total_error = first.error;
  heap.push(first);
  while (finite) {
    const double target = std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
    if (total_error <= target) break;
    if (static_cast<int>(heap.size()) >= opts.max_intervals) {
      out.converged = false;
      break;
    }
    const Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval cannot be split further in floating point.
      heap.push(worst);
      out.converged = false;
      break;
    }
    const Piece left = gauss_kronrod(f, worst.a, mid, finite);
    const Piece right = gauss_kronrod(f, mid, worst.b, finite);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the partition to shed accumulated cancellation.
  double value = 0.0, error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = value;
  out.error = error;
  if (!finite || !std::isfinite(value)) out.converged = false;
  return out;
}

QuadResult integrate_to_infinity(const Integrand& f, double a,
                                 const QuadOptions& opts) {
  const Integrand mapped = [&f, a](double t) {
    const double s = 1.0 - t;
    const double y = a + t / s;
    if (!std::isfinite(y)) return 0.0;
    const double value = f(y);
    if (value == 0.0) return 0.0;
    return value / (s * s);
  };
  return integrate(mapped, 0.0, 1.0, opts);
}

}  // namespace pbound
