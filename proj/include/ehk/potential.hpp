#pragma once

// Analytic 1-D barrier potentials, their continuation into the complex
// coordinate plane, and the real-axis turning-point geometry.
//
// Units: mass m = 1 throughout. Energies, lengths and times are in whatever
// reduced units the caller chooses; hbar is passed explicitly where needed.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <boost/math/tools/roots.hpp>

#include "ehk/error.hpp"

namespace ehk {

using cplx = std::complex<double>;

enum class Family { Eckart, Algebraic, Gaussian, Parabolic, Harmonic };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Eckart: return "eckart";
    case Family::Algebraic: return "algebraic";
    case Family::Gaussian: return "gaussian";
    case Family::Parabolic: return "parabolic";
    case Family::Harmonic: return "harmonic";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  if (s == "eckart") return Family::Eckart;
  if (s == "algebraic") return Family::Algebraic;
  if (s == "gaussian") return Family::Gaussian;
  if (s == "parabolic") return Family::Parabolic;
  if (s == "harmonic") return Family::Harmonic;
  throw ConfigError("unknown potential family '" + std::string(s) + "'");
}

/// Periodic linear drive V(q,t) += q * amplitude * sin(omega * t).
struct Drive {
  double amplitude = 0.0;
  double omega = 0.0;
};

struct PotentialSpec {
  Family family = Family::Eckart;
  int k = 2;           // exponent of the algebraic family, k >= 2
  double v0 = 1.0;     // barrier height V(0)
  double l = 1.0;      // barrier length scale
  std::optional<Drive> drive;
  double pole_exclusion = 1e-6;  // in units of l

  static PotentialSpec eckart(double v0, double l) { return {Family::Eckart, 2, v0, l, {}, 1e-6}; }
  static PotentialSpec algebraic(int k, double v0, double l) {
    return {Family::Algebraic, k, v0, l, {}, 1e-6};
  }
  static PotentialSpec gaussian(double v0, double l) { return {Family::Gaussian, 2, v0, l, {}, 1e-6}; }
  static PotentialSpec parabolic(double v0, double l) { return {Family::Parabolic, 2, v0, l, {}, 1e-6}; }
  // V0 (q/l)^2: a well, not a barrier. Used as a quadratic test Hamiltonian.
  static PotentialSpec harmonic(double v0, double l) { return {Family::Harmonic, 2, v0, l, {}, 1e-6}; }

  PotentialSpec with_drive(double amplitude, double omega) const {
    PotentialSpec s = *this;
    s.drive = Drive{amplitude, omega};
    return s;
  }

  bool driven() const { return drive.has_value(); }

  void validate() const {
    if (!(v0 > 0.0)) throw InvalidArgument("potential: V0 must be positive");
    if (!(l > 0.0)) throw InvalidArgument("potential: l must be positive");
    if (family == Family::Algebraic && k < 2) throw InvalidArgument("potential: algebraic k must be >= 2");
    if (drive && drive->omega < 0.0) throw InvalidArgument("potential: drive omega must be >= 0");
    if (!(pole_exclusion > 0.0)) throw InvalidArgument("potential: pole exclusion radius must be positive");
  }
};

/// Value and first two q-derivatives of the potential at one point.
template <class T>
struct Derivs {
  T v{};
  T dv{};
  T d2v{};
};

using ComplexValueAndDerivs = Derivs<cplx>;

/// Homogeneous force term of the drive at time t: dV/dq picks up A sin(Omega t).
inline double drive_tilt(const PotentialSpec& spec, double t) {
  if (!spec.drive) return 0.0;
  return spec.drive->amplitude * std::sin(spec.drive->omega * t);
}

namespace detail {

// sech(z), tanh(z) written so neither overflows for large |Re z|.
template <class T>
std::pair<T, T> sech_tanh(T z) {
  using std::exp;
  using std::real;
  const bool negative = real(z) < 0.0;
  if (negative) z = -z;
  const T e1 = exp(-z);
  const T e2 = e1 * e1;
  const T sech = 2.0 * e1 / (1.0 + e2);
  T tanh = (1.0 - e2) / (1.0 + e2);
  if (negative) tanh = -tanh;
  return {sech, tanh};
}

template <class T>
T ipow(T x, int n) {
  T r = T(1.0);
  while (n > 0) {
    if (n & 1) r *= x;
    x *= x;
    n >>= 1;
  }
  return r;
}

template <class T>
Derivs<T> barrier(const PotentialSpec& s, T q) {
  const T z = q / s.l;
  const double l2 = s.l * s.l;
  Derivs<T> d;
  switch (s.family) {
    case Family::Eckart: {
      auto [sech, tanh] = sech_tanh(z);
      const T s2 = sech * sech;
      d.v = s.v0 * s2;
      d.dv = -2.0 * s.v0 / s.l * s2 * tanh;
      d.d2v = s.v0 / l2 * s2 * (4.0 - 6.0 * s2);
      break;
    }
    case Family::Algebraic: {
      const T inv = 1.0 / (1.0 + z * z);
      const T pk = ipow(inv, s.k);
      d.v = s.v0 * pk;
      d.dv = -2.0 * s.k * s.v0 / s.l * z * pk * inv;
      d.d2v = -2.0 * s.k * s.v0 / l2 * pk * inv * inv * (1.0 - (2.0 * s.k + 1.0) * z * z);
      break;
    }
    case Family::Gaussian: {
      using std::exp;
      const T e = exp(-z * z);
      d.v = s.v0 * e;
      d.dv = -2.0 * s.v0 / s.l * z * e;
      d.d2v = s.v0 / l2 * (4.0 * z * z - 2.0) * e;
      break;
    }
    case Family::Parabolic: {
      d.v = s.v0 * (1.0 - z * z);
      d.dv = -2.0 * s.v0 / s.l * z;
      d.d2v = T(-2.0 * s.v0 / l2);
      break;
    }
    case Family::Harmonic: {
      d.v = s.v0 * z * z;
      d.dv = 2.0 * s.v0 / s.l * z;
      d.d2v = T(2.0 * s.v0 / l2);
      break;
    }
  }
  return d;
}

// Half-width (in units of l) of the concave region around the top, i.e. the
// inflection point of the static barrier.
inline double inflection(const PotentialSpec& s) {
  switch (s.family) {
    case Family::Eckart: return std::acosh(std::sqrt(1.5));
    case Family::Algebraic: return 1.0 / std::sqrt(2.0 * s.k + 1.0);
    case Family::Gaussian: return 1.0 / std::sqrt(2.0);
    case Family::Parabolic:
    case Family::Harmonic: return std::numeric_limits<double>::infinity();
  }
  return 1.0;
}

}  // namespace detail

/// Distance from q to the nearest pole of the analytic continuation
/// (infinity for entire potentials).
inline double pole_distance(const PotentialSpec& spec, cplx q) {
  const cplx z = q / spec.l;
  switch (spec.family) {
    case Family::Eckart: {
      const double n = std::round(z.imag() / std::numbers::pi - 0.5);
      return std::abs(z - cplx(0.0, std::numbers::pi * (n + 0.5))) * spec.l;
    }
    case Family::Algebraic:
      return std::min(std::abs(z - cplx(0.0, 1.0)), std::abs(z + cplx(0.0, 1.0))) * spec.l;
    case Family::Gaussian:
    case Family::Parabolic:
    case Family::Harmonic: break;
  }
  return std::numeric_limits<double>::infinity();
}

/// V(q,t), dV/dq and d2V/dq2 on the real axis. No pole check is needed there.
inline Derivs<double> eval_real(const PotentialSpec& spec, double q, double t = 0.0) {
  Derivs<double> d = detail::barrier(spec, q);
  if (spec.drive) {
    const double tilt = drive_tilt(spec, t);
    d.v += q * tilt;
    d.dv += tilt;
  }
  return d;
}

/// Complex continuation V(q) = r(x,y) + i j(x,y) plus drive, with derivatives.
inline ComplexValueAndDerivs eval_complex(const PotentialSpec& spec, cplx q, double t = 0.0) {
  const double dist = pole_distance(spec, q);
  if (dist < spec.pole_exclusion * spec.l) {
    throw PoleProximity("q = (" + std::to_string(q.real()) + ", " + std::to_string(q.imag()) +
                        ") lies within the pole exclusion radius");
  }
  ComplexValueAndDerivs d = detail::barrier(spec, q);
  if (spec.drive) {
    const double tilt = drive_tilt(spec, t);
    d.v += q * tilt;
    d.dv += tilt;
  }
  return d;
}

/// Asymptotic angle of the burning lines in the upper right quadrant:
/// pi / (2(k+1)) for the algebraic family, 0 for faster-than-power decay,
/// and nothing for the parabolic barrier, which has no asymptotic region.
inline std::optional<double> burning_line_angle(const PotentialSpec& spec) {
  switch (spec.family) {
    case Family::Algebraic: return std::numbers::pi / (2.0 * (spec.k + 1));
    case Family::Eckart:
    case Family::Gaussian: return 0.0;
    case Family::Parabolic:
    case Family::Harmonic: return std::nullopt;
  }
  return std::nullopt;
}

/// Barrier maximum of the potential frozen at time t.
struct BarrierTop {
  double position = 0.0;
  double value = 0.0;
};

inline BarrierTop barrier_top(const PotentialSpec& spec, double t = 0.0) {
  if (spec.family == Family::Harmonic) throw InvalidArgument("harmonic potential has no barrier top");
  const double tilt = drive_tilt(spec, t);
  if (tilt == 0.0) return {0.0, spec.v0};
  if (spec.family == Family::Parabolic) {
    const double q = tilt * spec.l * spec.l / (2.0 * spec.v0);
    return {q, eval_real(spec, q, t).v};
  }
  // dV/dq is monotone between the inflection points.
  const double a = -detail::inflection(spec) * spec.l;
  const double b = -a;
  auto slope = [&](double q) { return eval_real(spec, q, t).dv; };
  if (!(slope(a) > 0.0 && slope(b) < 0.0)) {
    throw NonBracketable("frozen driven potential has no barrier maximum");
  }
  boost::uintmax_t iters = 200;
  auto [lo, hi] = boost::math::tools::toms748_solve(
      slope, a, b, boost::math::tools::eps_tolerance<double>(50), iters);
  const double q = 0.5 * (lo + hi);
  return {q, eval_real(spec, q, t).v};
}

struct TurningPoints {
  double left = 0.0;
  double right = 0.0;
};

namespace detail {

// Walks outward from the barrier top until V(q,t) < E, then refines the
// crossing. direction = +1 for the right flank, -1 for the left flank.
inline double flank_crossing(const PotentialSpec& spec, double energy, double t, double top, int direction) {
  auto f = [&](double q) { return eval_real(spec, q, t).v - energy; };
  const double limit = 1e3 * spec.l;
  double step = 0.05 * spec.l;
  double inner = top;
  double outer = top;
  while (true) {
    outer = inner + direction * step;
    if (std::abs(outer - top) > limit) {
      throw NonBracketable("no turning point within the search interval");
    }
    if (f(outer) < 0.0) break;
    inner = outer;
    step *= 1.05;
  }
  boost::uintmax_t iters = 200;
  auto [lo, hi] = boost::math::tools::toms748_solve(
      f, std::min(inner, outer), std::max(inner, outer), boost::math::tools::eps_tolerance<double>(44), iters);
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Both real turning points at energy E on the potential frozen at time t.
/// The flanks are solved independently, so a drive term breaks the mirror
/// symmetry as it should.
inline TurningPoints turning_points(const PotentialSpec& spec, double energy, double t = 0.0) {
  const BarrierTop top = barrier_top(spec, t);
  if (!(energy < top.value)) {
    throw NoTurningPoint("energy " + std::to_string(energy) + " is not below the barrier maximum " +
                         std::to_string(top.value));
  }
  TurningPoints tp;
  tp.right = detail::flank_crossing(spec, energy, t, top.position, +1);
  tp.left = detail::flank_crossing(spec, energy, t, top.position, -1);
  return tp;
}

/// Right-flank turning point q0 with V(q0, t) = E.
inline double turning_point(const PotentialSpec& spec, double energy, double t = 0.0) {
  return turning_points(spec, energy, t).right;
}

/// Barrier frequency from the curvature at the (static) top.
inline double barrier_frequency(const PotentialSpec& spec) {
  return std::sqrt(-detail::barrier(spec, 0.0).d2v);
}

}  // namespace ehk
