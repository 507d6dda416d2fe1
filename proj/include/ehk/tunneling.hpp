#pragma once

// Extended HK propagator G = G_> + G_<. Samples with initial energy below
// V0 - delta_pb that start on the far side of the barrier from psi_f run on
// the real axis to their turning point, jump to the opposite turning point
// with p = 0, and continue there with amplitude multiplied by
// T(q0) = exp(-|W(-q0, q0)|/hbar).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ehk/hk.hpp"
#include "ehk/wkb.hpp"

namespace ehk {

enum class JumpPolicy { InstantJump };

/// Constant phase attached to the amplitude at the jump.
enum class JumpPhase { None, PlusI, MinusI };

inline std::string_view to_string(JumpPhase p) {
  switch (p) {
    case JumpPhase::None: return "none";
    case JumpPhase::PlusI: return "+i";
    case JumpPhase::MinusI: return "-i";
  }
  return "?";
}

inline JumpPhase parse_jump_phase(std::string_view s) {
  if (s == "none" || s == "1") return JumpPhase::None;
  if (s == "+i" || s == "i" || s == "plus_i") return JumpPhase::PlusI;
  if (s == "-i" || s == "minus_i") return JumpPhase::MinusI;
  throw ConfigError("unknown jump phase '" + std::string(s) + "'");
}

inline cplx phase_factor(JumpPhase p) {
  switch (p) {
    case JumpPhase::None: return {1.0, 0.0};
    case JumpPhase::PlusI: return {0.0, 1.0};
    case JumpPhase::MinusI: return {0.0, -1.0};
  }
  return {1.0, 0.0};
}

struct EhkConfig {
  std::optional<double> delta_pb;  // absolute energy margin; 0.15 V0 if unset
  JumpPolicy jump_policy = JumpPolicy::InstantJump;
  int max_jumps = 1;
  JumpPhase jump_phase = JumpPhase::PlusI;
  bool strict_jump_budget = false;  // throw instead of reflecting once the budget is used

  double margin(const PotentialSpec& spec) const { return delta_pb.value_or(0.15 * spec.v0); }

  void validate(const PotentialSpec& spec) const {
    const double d = margin(spec);
    // delta_pb = V0 is allowed: it empties G_< and reduces eHK to HK.
    if (!(d > 0.0 && d <= spec.v0)) throw InvalidArgument("ehk: delta_pb must lie in (0, V0]");
    if (max_jumps < 1) throw InvalidArgument("ehk: max_jumps must be >= 1");
  }
};

/// Initial energy p^2/2 + V(q, 0) used by the population filter.
inline double initial_energy(const PotentialSpec& spec, double q, double p) {
  return 0.5 * p * p + eval_real(spec, q, 0.0).v;
}

/// True if a sample with this initial energy belongs to G_<.
inline bool in_low_population(const PotentialSpec& spec, const EhkConfig& cfg, double energy) {
  return energy < spec.v0 - cfg.margin(spec);
}

/// Event policy for run_trajectory: on a momentum reversal at the near
/// flank of the barrier (the side opposite psi_f) the state is moved to the
/// far turning point of the potential frozen at that instant.
class JumpEvents {
 public:
  JumpEvents(const PotentialSpec& spec, double hbar, double target_side, const EhkConfig& cfg)
      : spec_(spec), hbar_(hbar), target_side_(target_side < 0.0 ? -1.0 : 1.0), cfg_(cfg) {}

  void reset() {
    jumps_ = 0;
    jump_time_.reset();
    tunnel_ = 1.0;
    rerouted_ = false;
  }

  bool triggered(const TrajState& prev, const TrajState& now) const {
    if (prev[1] == 0.0 || (prev[1] < 0.0) == (now[1] < 0.0)) return false;
    return now[0] * target_side_ < 0.0;
  }

  bool apply(double t, TrajState& y) {
    if (jumps_ >= cfg_.max_jumps) {
      if (cfg_.strict_jump_budget) throw JumpBudgetExceeded("more than " + std::to_string(cfg_.max_jumps) + " jumps");
      return false;
    }
    const double energy = 0.5 * y[1] * y[1] + eval_real(spec_, y[0], t).v;
    TurningPoints tp;
    try {
      tp = turning_points(spec_, energy, t);
    } catch (const NoTurningPoint&) {
      rerouted_ = true;
      return false;
    } catch (const NonBracketable&) {
      rerouted_ = true;
      return false;
    }
    const double near = target_side_ > 0.0 ? tp.left : tp.right;
    const double far = target_side_ > 0.0 ? tp.right : tp.left;
    // A reversal away from the barrier flank (possible under a drive) is a
    // plain reflection, not a tunnelling event.
    if (std::abs(y[0] - near) > 1e-4 * spec_.l) {
      rerouted_ = true;
      return false;
    }
    const double w = short_action(spec_, energy, tp.left, tp.right, t).magnitude();
    tunnel_ = std::exp(-w / hbar_);
    y[0] = far;
    y[1] = 0.0;
    ++jumps_;
    jump_time_ = t;
    return true;
  }

  int jumps() const { return jumps_; }
  std::optional<double> jump_time() const { return jump_time_; }
  double tunnel() const { return tunnel_; }
  bool rerouted() const { return rerouted_; }

  /// Amplitude factor at time t: T times the jump phase after the jump.
  cplx factor(double t) const {
    if (jump_time_ && t > *jump_time_) return tunnel_ * phase_factor(cfg_.jump_phase);
    return {1.0, 0.0};
  }

 private:
  const PotentialSpec& spec_;
  double hbar_;
  double target_side_;
  EhkConfig cfg_;
  int jumps_ = 0;
  std::optional<double> jump_time_;
  double tunnel_ = 1.0;
  bool rerouted_ = false;
};

/// Propagates one G_< sample to time t. `target_side` is the sign of the
/// final packet's center; the jump only happens at the opposite flank.
inline HKSample tunneling_trajectory(const PotentialSpec& spec, double q0, double p0, double t, double hbar,
                                     double gamma, double target_side, const EhkConfig& cfg,
                                     const TrajectoryOptions& opt = {}) {
  cfg.validate(spec);
  const double e = initial_energy(spec, q0, p0);
  if (!in_low_population(spec, cfg, e)) {
    throw InvalidArgument("tunneling_trajectory: initial energy is not below V0 - delta_pb");
  }
  JumpEvents ev(spec, hbar, target_side, cfg);
  const double times[] = {t};
  const auto pts = run_trajectory(spec, q0, p0, times, hbar, gamma, opt, ev);
  const PhasePoint& pt = pts.front();
  HKSample s;
  s.q0 = q0;
  s.p0 = p0;
  s.qt = pt.q;
  s.pt = pt.p;
  s.action = pt.action;
  s.monodromy = pt.m;
  s.prefactor = pt.prefactor;
  s.tunnel = ev.jump_time() && t > *ev.jump_time() ? ev.tunnel() : 1.0;
  s.weight = ev.factor(t) / s.tunnel;
  s.t = t;
  s.jump_time = ev.jump_time();
  return s;
}

/// eHK estimate of c_fi(t). G_> samples are plain HK; G_< samples on the far
/// side from psi_f carry the turning-point jump; G_< samples on psi_f's side
/// are propagated without jumps (ordinary reflection). The result also holds
/// the per-population partial sums.
inline EnsembleResult ehk_correlation(const PotentialSpec& spec, const GaussianPacket& psi_i,
                                      const GaussianPacket& psi_f, std::span<const double> times, std::size_t n,
                                      std::uint64_t seed, double hbar, const EhkConfig& cfg,
                                      const PropagationOptions& opt = {}) {
  spec.validate();
  psi_i.validate();
  psi_f.validate();
  cfg.validate(spec);
  check_times(times);
  std::vector<std::string> warnings;
  if (std::abs(psi_i.q) < 10.0 * spec.l || std::abs(psi_f.q) < 10.0 * spec.l) {
    warnings.emplace_back("packet centers closer than 10 l to the barrier; the jump construction assumes asymptotic starts");
  }
  SamplerOptions sopt;
  sopt.broaden = opt.broaden;
  sopt.stratify = opt.stratify;
  sopt.filter = [&](double q, double p) { return in_low_population(spec, cfg, initial_energy(spec, q, p)); };
  const auto samples = sample_phase_space(psi_i, n, seed, hbar, sopt);
  const double target_side = psi_f.q < 0.0 ? -1.0 : 1.0;
  if (samples.size() < n) {
    warnings.emplace_back("stratified sampling hit its candidate cap; " + std::to_string(samples.size()) +
                          " samples used");
    n = samples.size();
  }

  auto res = accumulate_ensemble(n, times, opt, [&](std::size_t j, std::span<cplx> y) {
    const PhaseSample& s = samples[j];
    if (!s.selected) {
      NoEvents none;
      const auto pts = run_trajectory(spec, s.q, s.p, times, hbar, psi_i.gamma, opt.trajectory, none);
      hk_terms(s, n, pts, psi_i, psi_f, hbar, 1.0, y);
      return SampleOutcome{};
    }
    if (s.q * target_side > 0.0) {
      NoEvents none;
      const auto pts = run_trajectory(spec, s.q, s.p, times, hbar, psi_i.gamma, opt.trajectory, none);
      hk_terms(s, n, pts, psi_i, psi_f, hbar, 1.0, y);
      return SampleOutcome{1, false, false, 1};
    }
    JumpEvents ev(spec, hbar, target_side, cfg);
    const auto pts = run_trajectory(spec, s.q, s.p, times, hbar, psi_i.gamma, opt.trajectory, ev);
    const cplx in = coherent_overlap(GaussianPacket{psi_i.gamma, s.q, s.p}, psi_i, hbar);
    const double scale = static_cast<double>(n) * s.weight;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const PhasePoint& pt = pts[k];
      const cplx fin = coherent_overlap(psi_f, GaussianPacket{psi_i.gamma, pt.q, pt.p}, hbar);
      y[k] = scale * fin * pt.prefactor * std::exp(cplx(0.0, pt.action / hbar)) * in * ev.factor(pt.t);
    }
    // A driven sample that met no usable turning point is counted with G_>.
    const bool rerouted = ev.rerouted() && ev.jumps() == 0;
    return SampleOutcome{rerouted ? 0 : 1, ev.jumps() > 0, rerouted, 1};
  });
  pin_initial_overlap(res, psi_i, psi_f, hbar);
  res.warnings = std::move(warnings);
  return res;
}

}  // namespace ehk
