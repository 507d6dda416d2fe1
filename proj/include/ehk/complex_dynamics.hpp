#pragma once

// Newton's equation continued to the complex coordinate plane q = x + i y:
//   x'' + r_x = 0,   y'' + j_x = 0,   with V(q) = r(x,y) + i j(x,y).
// The complex energy eps_re + i eps_im is conserved for static potentials.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ehk/csv.hpp"
#include "ehk/ode.hpp"
#include "ehk/parallel.hpp"
#include "ehk/potential.hpp"

namespace ehk {

struct ComplexState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double t = 0.0;

  cplx q() const { return {x, y}; }
  cplx v() const { return {vx, vy}; }
};

enum class OrbitClass { ClassA, ClassB, ClassC, Unclassified };
enum class TerminalReason { TimeExhausted, LeftDomain, PoleAbort };

inline std::string_view to_string(OrbitClass c) {
  switch (c) {
    case OrbitClass::ClassA: return "a";
    case OrbitClass::ClassB: return "b";
    case OrbitClass::ClassC: return "c";
    case OrbitClass::Unclassified: return "unclassified";
  }
  return "?";
}

inline std::string_view to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::TimeExhausted: return "time_exhausted";
    case TerminalReason::LeftDomain: return "left_domain";
    case TerminalReason::PoleAbort: return "pole_abort";
  }
  return "?";
}

struct OrbitRecord {
  std::vector<ComplexState> samples;
  OrbitClass classification = OrbitClass::Unclassified;
  TerminalReason terminal_reason = TerminalReason::TimeExhausted;
};

struct EnergySplit {
  double re = 0.0;
  double im = 0.0;
};

/// Real and imaginary parts of the complex energy of a state.
inline EnergySplit energy_split(const ComplexState& s, const PotentialSpec& spec) {
  const cplx v = eval_complex(spec, s.q(), s.t).v;
  return {(s.vx * s.vx - s.vy * s.vy) / 2.0 + v.real(), s.vx * s.vy + v.imag()};
}

struct ComplexIntegrationOptions {
  std::size_t n_samples = 400;  // uniform output grid over [0, t_max]
  double escape_radius = 1e3;   // in units of l
};

/// Orbit classes of the complex-plane dynamics. Orbits started on the real
/// axis with zero imaginary energy that never cross x = 0 are the real-axis
/// limit of class (b) and are reported as such.
inline OrbitClass classify_orbit(const OrbitRecord& record, const PotentialSpec& spec) {
  if (record.samples.size() < 10) throw InvalidArgument("classify_orbit needs at least 10 samples");
  const ComplexState& s0 = record.samples.front();
  const double side = s0.x >= 0.0 ? 1.0 : -1.0;
  for (const auto& s : record.samples) {
    if (s.x * side < 0.0) return OrbitClass::ClassA;
  }
  const EnergySplit e = energy_split(s0, spec);
  if (std::abs(s0.vx) <= 1e-12 && std::abs(e.im) <= 1e-9 * spec.v0) return OrbitClass::ClassC;
  const double r_start = eval_complex(spec, cplx(s0.x, 0.0), s0.t).v.real();
  if (std::abs(e.im) < r_start) return OrbitClass::ClassB;
  return OrbitClass::Unclassified;
}

/// Integrates the complex Newton equation from `initial` up to `t_max`.
/// Orbits stop early once |q| exceeds the escape radius or come too close
/// to a pole of the continuation; the reason is kept in the record.
inline OrbitRecord integrate_complex(const PotentialSpec& spec, const ComplexState& initial, double t_max,
                                     double tol, const ComplexIntegrationOptions& opt = {}) {
  if (!(t_max > 0.0)) throw InvalidArgument("integrate_complex: t_max must be positive");
  if (!(tol >= 1e-12 && tol <= 1e-4)) throw InvalidArgument("integrate_complex: tol outside [1e-12, 1e-4]");
  eval_complex(spec, initial.q(), initial.t);  // rejects starts inside the exclusion radius

  using State = std::array<double, 4>;
  auto rhs = [&spec](double t, const State& y, State& dy) {
    const cplx f = eval_complex(spec, cplx(y[0], y[1]), t).dv;
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = -f.real();
    dy[3] = -f.imag();
  };
  ode::Tolerances tols;
  tols.rtol = tol;
  tols.atol = tol * 1e-3 * std::max(spec.l, 1.0);
  const double t0 = initial.t;
  auto stepper = ode::make_dopri5<4>(rhs, t0, State{initial.x, initial.y, initial.vx, initial.vy}, tols);

  OrbitRecord rec;
  const std::size_t n = std::max<std::size_t>(opt.n_samples, 1);
  rec.samples.reserve(n + 2);
  rec.samples.push_back(initial);
  const double escape = opt.escape_radius * spec.l;
  std::size_t next = 1;
  auto to_state = [](const State& y, double t) { return ComplexState{y[0], y[1], y[2], y[3], t}; };
  try {
    while (stepper.t() < t0 + t_max) {
      const State& cur = stepper.y();
      const double r = std::hypot(cur[0], cur[1]);
      // local speed scale: |v| can vanish at turning points, |V| cannot there
      const double vloc = std::sqrt(2.0 * std::abs(eval_complex(spec, cplx(cur[0], cur[1]), stepper.t()).v));
      stepper.set_h_max(0.25 * std::max(spec.l, r - 5.0 * spec.l) / (std::hypot(cur[2], cur[3]) + vloc + 1e-300));
      stepper.step(t0 + t_max);
      while (next <= n) {
        const double ts = t0 + t_max * static_cast<double>(next) / static_cast<double>(n);
        if (ts > stepper.t()) break;
        rec.samples.push_back(to_state(stepper.dense(ts), ts));
        ++next;
      }
      const State& y = stepper.y();
      if (std::hypot(y[0], y[1]) > escape) {
        if (rec.samples.back().t < stepper.t()) rec.samples.push_back(to_state(y, stepper.t()));
        rec.terminal_reason = TerminalReason::LeftDomain;
        break;
      }
    }
  } catch (const PoleProximity&) {
    rec.terminal_reason = TerminalReason::PoleAbort;
  } catch (const StepFailure&) {
    // step control usually gives up just short of the exclusion radius
    const State& y = stepper.y();
    if (pole_distance(spec, cplx(y[0], y[1])) > 1e-2 * spec.l) throw;
    rec.terminal_reason = TerminalReason::PoleAbort;
  }
  if (rec.samples.size() >= 10) rec.classification = classify_orbit(rec, spec);
  return rec;
}

/// Straight-line or parallel-line geometry emitted next to the orbits.
struct AtlasLine {
  std::string kind;  // "burning_line", "asymptote" or "turning_point"
  double angle = 0.0;
  std::vector<cplx> points;
};

struct AtlasOrbit {
  OrbitRecord record;
  std::optional<std::string> failure;
};

struct AtlasDataset {
  std::vector<AtlasOrbit> orbits;
  std::vector<AtlasLine> lines;
  std::optional<double> burning_angle;
  double line_offset = 0.0;  // measured height of parallel burning lines
};

struct AtlasOptions {
  std::optional<double> reference_energy;
  std::size_t n_samples = 400;
  unsigned threads = 1;
};

/// Zero-energy class (c) start at x_i: purely imaginary velocity with
/// eps_re = 0 and eps_im = 0. `sign` selects the direction of y'.
inline ComplexState class_c_start(const PotentialSpec& spec, double x_i, double sign = 1.0) {
  const double r = eval_complex(spec, cplx(x_i, 0.0)).v.real();
  return {x_i, 0.0, 0.0, sign * std::sqrt(2.0 * r), 0.0};
}

/// Integrates a batch of complex orbits and attaches the burning lines and
/// turning points of the potential. Individual failures are recorded per
/// orbit and never abort the batch.
inline AtlasDataset emit_orbit_atlas(const PotentialSpec& spec, const std::vector<ComplexState>& initial_conditions,
                                     double t_max, double tol, const AtlasOptions& opt = {}) {
  if (initial_conditions.empty()) throw InvalidArgument("emit_orbit_atlas: no initial conditions");
  AtlasDataset atlas;
  atlas.orbits.resize(initial_conditions.size());
  ComplexIntegrationOptions iopt;
  iopt.n_samples = opt.n_samples;
  parallel_for(initial_conditions.size(), opt.threads, [&](std::size_t i) {
    try {
      atlas.orbits[i].record = integrate_complex(spec, initial_conditions[i], t_max, tol, iopt);
    } catch (const Error& e) {
      atlas.orbits[i].failure = e.code() + ": " + e.what();
    }
  });

  double reach = 10.0 * spec.l;
  for (const auto& o : atlas.orbits) {
    for (const auto& s : o.record.samples) reach = std::max(reach, std::abs(s.q()));
  }

  atlas.burning_angle = burning_line_angle(spec);
  if (atlas.burning_angle) {
    const double phi = *atlas.burning_angle;
    if (phi > 0.0) {
      for (double a : {phi, -phi, std::numbers::pi - phi, std::numbers::pi + phi}) {
        atlas.lines.push_back({"asymptote", a, {cplx(0.0, 0.0), std::polar(reach, a)}});
      }
    } else {
      // Lines run parallel to the real axis; their height is read off a
      // representative class (c) orbit rather than assumed.
      const OrbitRecord probe = integrate_complex(spec, class_c_start(spec, 10.0 * spec.l), t_max, tol, iopt);
      atlas.line_offset = std::abs(probe.samples.back().y);
      for (double y : {atlas.line_offset, -atlas.line_offset}) {
        atlas.lines.push_back({"burning_line", 0.0, {cplx(-reach, y), cplx(reach, y)}});
      }
    }
  }
  if (opt.reference_energy && *opt.reference_energy > 0.0 && *opt.reference_energy < spec.v0) {
    const TurningPoints tp = turning_points(spec, *opt.reference_energy);
    atlas.lines.push_back({"turning_point", 0.0, {cplx(tp.left, 0.0), cplx(tp.right, 0.0)}});
  }
  return atlas;
}

/// orbit_id,class,t,x,y
inline void write_orbits_csv(std::ostream& os, const AtlasDataset& atlas) {
  os << "orbit_id,class,t,x,y\n";
  for (std::size_t i = 0; i < atlas.orbits.size(); ++i) {
    const auto& o = atlas.orbits[i];
    const std::string cls = o.failure ? "failed" : std::string(to_string(o.record.classification));
    for (const auto& s : o.record.samples) csv::row(os, i, cls, s.t, s.x, s.y);
  }
}

/// line_id,kind,angle,x,y  (one row per vertex)
inline void write_lines_csv(std::ostream& os, const AtlasDataset& atlas) {
  os << "line_id,kind,angle,x,y\n";
  for (std::size_t i = 0; i < atlas.lines.size(); ++i) {
    const auto& line = atlas.lines[i];
    for (const auto& p : line.points) csv::row(os, i, line.kind, line.angle, p.real(), p.imag());
  }
}

}  // namespace ehk
