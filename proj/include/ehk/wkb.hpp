#pragma once

// Short action W(x', x) = int_{x'}^{x} dq sqrt(2m [E - V(q)]), the tunnel
// factor exp(-|W(-q0, q0)|/hbar) and the uniform (Kemble) transmission.

#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ehk/potential.hpp"

namespace ehk {

struct ActionValue {
  cplx w;             // real on allowed segments, i*|W| under the barrier
  double e = 0.0;
  double q_from = 0.0;
  double q_to = 0.0;
  double error = 0.0; // quadrature error estimate of |w|

  double magnitude() const { return std::abs(w); }
  bool forbidden() const { return w.imag() != 0.0; }
};

namespace detail {

// int_a^b f(q) dq with both halves mapped through q = end -+ s^2 so that an
// inverse-square-root singularity at either end becomes smooth.
template <class F>
double endpoint_safe_integral(F f, double a, double b, double rel_tol, double& err) {
  using boost::math::quadrature::gauss_kronrod;
  const double mid = 0.5 * (a + b);
  const double s_max = std::sqrt(mid - a);
  double e1 = 0.0, e2 = 0.0;
  const double left = gauss_kronrod<double, 31>::integrate(
      [&](double s) { return 2.0 * s * f(a + s * s); }, 0.0, s_max, 20, rel_tol, &e1);
  const double right = gauss_kronrod<double, 31>::integrate(
      [&](double s) { return 2.0 * s * f(b - s * s); }, 0.0, s_max, 20, rel_tol, &e2);
  err = e1 + e2;
  return left + right;
}

}  // namespace detail

/// W between x_from and x_to on the potential frozen at time t. Segments
/// must lie entirely on one side of E; split at turning points first.
inline ActionValue short_action(const PotentialSpec& spec, double energy, double x_from, double x_to,
                                double t = 0.0, double rel_tol = 1e-11) {
  ActionValue out;
  out.e = energy;
  out.q_from = x_from;
  out.q_to = x_to;
  if (x_from == x_to) return out;
  const double a = std::min(x_from, x_to);
  const double b = std::max(x_from, x_to);
  auto kinetic = [&](double q) { return energy - eval_real(spec, q, t).v; };

  // Turning points sit at the ends; anything else changing sign is a mixed segment.
  const double scale = std::max(std::abs(energy), spec.v0);
  constexpr int probes = 64;
  int sign = 0;
  for (int i = 1; i < probes; ++i) {
    const double k = kinetic(a + (b - a) * i / probes);
    if (std::abs(k) <= 1e-12 * scale) continue;
    const int s = k > 0.0 ? 1 : -1;
    if (sign != 0 && s != sign) throw MixedSegment("segment crosses a turning point; split it first");
    sign = s;
  }
  if (sign == 0) return out;  // degenerate: E sits on V over the whole segment

  auto integrand = [&](double q) { return std::sqrt(2.0 * std::max(sign * kinetic(q), 0.0)); };
  double err = 0.0;
  double value = detail::endpoint_safe_integral(integrand, a, b, rel_tol, err);
  if (x_from > x_to) value = -value;
  out.w = sign > 0 ? cplx(value, 0.0) : cplx(0.0, value);
  out.error = err;
  return out;
}

/// exp(-|W(q_left, q_right)|/hbar) between the two turning points at energy
/// E on the potential frozen at time t.
inline double tunnel_factor(const PotentialSpec& spec, double energy, double hbar, double t = 0.0) {
  const TurningPoints tp = turning_points(spec, energy, t);
  const ActionValue w = short_action(spec, energy, tp.left, tp.right, t);
  return std::exp(-w.magnitude() / hbar);
}

/// Kemble form P = 1 / (1 + exp(2|W|/hbar)) below the top; above it the
/// parabolic-top continuation with the barrier frequency.
inline double uniform_wkb_transmission(const PotentialSpec& spec, double energy, double hbar) {
  if (!(energy > 0.0)) return 0.0;
  if (energy < spec.v0) {
    const TurningPoints tp = turning_points(spec, energy);
    const double w = short_action(spec, energy, tp.left, tp.right).magnitude();
    return 1.0 / (1.0 + std::exp(2.0 * w / hbar));
  }
  const double omega_b = barrier_frequency(spec);
  return 1.0 / (1.0 + std::exp(-2.0 * std::numbers::pi * (energy - spec.v0) / (hbar * omega_b)));
}

}  // namespace ehk
