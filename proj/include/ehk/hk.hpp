#pragma once

// Herman-Kluk initial-value representation on the real axis:
//   c_fi(t) = int dq dp/(2 pi hbar) <psi_f|gamma(p_t,q_t)> R e^{iS/hbar} <gamma(p,q)|psi_i>
// evaluated by importance-sampled Monte Carlo over the initial phase space.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ehk/ode.hpp"
#include "ehk/packet.hpp"
#include "ehk/parallel.hpp"
#include "ehk/potential.hpp"
#include "ehk/series.hpp"

namespace ehk {

/// Linearized flow d(q_t, p_t)/d(q, p).
struct MonodromyMatrix {
  double qq = 1.0;
  double qp = 0.0;
  double pq = 0.0;
  double pp = 1.0;

  double det() const { return qq * pp - qp * pq; }
};

/// Continuous argument of the prefactor radicand along one trajectory.
struct PrefactorBranch {
  double arg = 0.0;
};

/// R = sqrt(1/2 [m_qq + m_pp - i hbar gamma m_qp - m_pq / (i hbar gamma)]).
/// The square-root branch follows `branch`, which is updated in place.
/// Throws BranchLoss if the radicand argument moved by more than pi/2 since
/// the previous call, which means the caller sampled the monodromy too coarsely.
inline cplx hk_prefactor(const MonodromyMatrix& m, double gamma, double hbar, PrefactorBranch& branch) {
  const double hg = hbar * gamma;
  const cplx z(0.5 * (m.qq + m.pp), 0.5 * (m.pq / hg - hg * m.qp));
  double delta = std::arg(z) - branch.arg;
  delta = std::remainder(delta, 2.0 * std::numbers::pi);
  if (std::abs(delta) > 0.5 * std::numbers::pi) {
    throw BranchLoss("prefactor argument jumped by " + std::to_string(delta));
  }
  branch.arg += delta;
  return std::sqrt(std::abs(z)) * std::exp(cplx(0.0, 0.5 * branch.arg));
}

/// One stored point of a real trajectory.
struct PhasePoint {
  double t = 0.0;
  double q = 0.0;
  double p = 0.0;
  double action = 0.0;
  MonodromyMatrix m;
  cplx prefactor{1.0, 0.0};
};

struct TrajectoryOptions {
  double tol = 1e-8;
  std::size_t stride_points = 200;  // prefactor branch-tracking grid
  int max_refinements = 4;          // stride doublings on BranchLoss
};

/// One propagated phase-space sample at a single time.
struct HKSample {
  double q0 = 0.0, p0 = 0.0;
  double qt = 0.0, pt = 0.0;
  double action = 0.0;
  MonodromyMatrix monodromy;
  cplx prefactor{1.0, 0.0};
  cplx weight{1.0, 0.0};
  double tunnel = 1.0;  // 1 unless the trajectory jumped
  double t = 0.0;
  std::optional<double> jump_time;
};

/// Integrator state: q, p, m_qq, m_qp, m_pq, m_pp, S.
using TrajState = std::array<double, 7>;

/// Event policy that never fires; plain HK trajectories use this.
struct NoEvents {
  void reset() {}
  bool triggered(const TrajState&, const TrajState&) const { return false; }
  bool apply(double, TrajState&) { return false; }
};

namespace detail {

inline MonodromyMatrix monodromy_of(const TrajState& y) { return {y[2], y[3], y[4], y[5]}; }

struct Checkpoint {
  double t;
  std::ptrdiff_t output;  // index into the requested times, or -1
};

inline std::vector<Checkpoint> checkpoints(std::span<const double> times, std::size_t stride) {
  std::vector<Checkpoint> cps;
  const double t_end = times.back();
  cps.reserve(times.size() + stride + 1);
  for (std::size_t i = 0; i < times.size(); ++i) cps.push_back({times[i], static_cast<std::ptrdiff_t>(i)});
  if (t_end > 0.0) {
    for (std::size_t k = 1; k < stride; ++k) cps.push_back({t_end * static_cast<double>(k) / stride, -1});
  }
  std::stable_sort(cps.begin(), cps.end(), [](const Checkpoint& a, const Checkpoint& b) { return a.t < b.t; });
  return cps;
}

template <class Events>
std::vector<PhasePoint> run_once(const PotentialSpec& spec, double q0, double p0, std::span<const double> times,
                                 double hbar, double gamma, const TrajectoryOptions& opt, std::size_t stride,
                                 Events& events) {
  auto rhs = [&spec](double t, const TrajState& y, TrajState& dy) {
    const Derivs<double> d = eval_real(spec, y[0], t);
    dy[0] = y[1];
    dy[1] = -d.dv;
    dy[2] = y[4];
    dy[3] = y[5];
    dy[4] = -d.d2v * y[2];
    dy[5] = -d.d2v * y[3];
    dy[6] = 0.5 * y[1] * y[1] - d.v;
  };
  ode::Tolerances tols;
  tols.rtol = opt.tol;
  tols.atol = opt.tol * 1e-2;
  const TrajState y0{q0, p0, 1.0, 0.0, 0.0, 1.0, 0.0};
  auto stepper = ode::make_dopri5<7>(rhs, 0.0, y0, tols);

  const auto cps = checkpoints(times, stride);
  std::vector<PhasePoint> out(times.size());
  PrefactorBranch branch;
  std::size_t next = 0;
  auto visit = [&](double t, const TrajState& y) {
    const cplx r = hk_prefactor(monodromy_of(y), gamma, hbar, branch);
    if (cps[next].output >= 0) out[cps[next].output] = {t, y[0], y[1], y[6], monodromy_of(y), r};
    ++next;
  };
  auto visit_until = [&](double t_lim, auto&& state_at) {
    while (next < cps.size() && cps[next].t <= t_lim) visit(cps[next].t, state_at(cps[next].t));
  };
  visit_until(0.0, [&](double) { return y0; });

  const double t_end = times.back();
  const double speed0 = std::sqrt(2.0 * spec.v0);
  while (stepper.t() < t_end) {
    // Far from the barrier the error estimate vanishes; bound the step so a
    // single step can never carry the orbit across the barrier region.
    const TrajState& cur = stepper.y();
    stepper.set_h_max(0.25 * std::max(spec.l, std::abs(cur[0]) - 5.0 * spec.l) / (std::abs(cur[1]) + speed0));
    stepper.step(t_end);
    if (events.triggered(stepper.y_prev(), stepper.y())) {
      // Locate p = 0 with single steps from the previous accepted point.
      const double t_a = stepper.t_prev();
      double lo = 0.0, hi = stepper.t() - t_a;
      double p_lo = stepper.y_prev()[1], p_hi = stepper.y()[1];
      TrajState at = stepper.y();
      double h = hi;
      const double p_scale = std::max(1.0, std::abs(p_lo));
      for (int it = 0; it < 100; ++it) {
        h = (p_hi == p_lo) ? 0.5 * (lo + hi) : std::clamp(lo - p_lo * (hi - lo) / (p_hi - p_lo), lo, hi);
        if (!(h > lo && h < hi)) h = 0.5 * (lo + hi);
        at = stepper.probe_from_prev(h);
        if (std::abs(at[1]) < 1e-8 * p_scale || hi - lo < 1e-15 * std::max(1.0, t_a)) break;
        if ((at[1] < 0.0) == (p_lo < 0.0)) {
          lo = h;
          p_lo = at[1];
        } else {
          hi = h;
          p_hi = at[1];
        }
      }
      const double t_ev = t_a + h;
      visit_until(t_ev, [&](double t) { return stepper.dense(t); });
      if (events.apply(t_ev, at)) {
        stepper.restart(t_ev, at);
        continue;
      }
    }
    visit_until(stepper.t(), [&](double t) { return t == stepper.t() ? stepper.y() : stepper.dense(t); });
  }
  visit_until(t_end, [&](double) { return stepper.y(); });
  return out;
}

}  // namespace detail

/// Integrates q' = p, p' = -V'(q,t) with the monodromy variational equations
/// and the action S' = p^2/2 - V. Returns the phase point, action, monodromy
/// and branch-continuous HK prefactor at every requested time.
/// `events` may relocate the state whenever the momentum changes sign.
template <class Events>
std::vector<PhasePoint> run_trajectory(const PotentialSpec& spec, double q0, double p0, std::span<const double> times,
                                       double hbar, double gamma, const TrajectoryOptions& opt, Events& events) {
  if (times.empty()) return {};
  if (times.front() < 0.0) throw InvalidArgument("trajectory times must be non-negative");
  for (int attempt = 0;; ++attempt) {
    events.reset();
    try {
      return detail::run_once(spec, q0, p0, times, hbar, gamma, opt, opt.stride_points << attempt, events);
    } catch (const BranchLoss&) {
      if (attempt >= opt.max_refinements) throw;
    }
  }
}

inline std::vector<PhasePoint> propagate_real(const PotentialSpec& spec, double q0, double p0,
                                              std::span<const double> times, double hbar, double gamma,
                                              const TrajectoryOptions& opt = {}) {
  NoEvents none;
  return run_trajectory(spec, q0, p0, times, hbar, gamma, opt, none);
}

/// One initial phase-space point with its importance weight: the weighted sum
/// sum_j weight_j f(q_j, p_j) estimates int dq dp/(2 pi hbar) f(q, p).
struct PhaseSample {
  double q = 0.0;
  double p = 0.0;
  double weight = 0.0;
  bool selected = true;  // result of the optional filter
};

struct SamplerOptions {
  double broaden = 1.0;  // widen the sampling Gaussian by this factor
  std::function<bool(double q, double p)> filter;
  // Fraction of the samples placed inside the filter region (0: plain
  // matched sampling). Each stratum keeps the matched density restricted to
  // it; weights carry the stratum mass estimated from the candidate stream.
  double stratify = 0.0;
};

/// Draws (q, p) from |<gamma(p,q)|psi>|^2 / (2 pi hbar), i.e. independent
/// normals with variances 1/gamma and gamma hbar^2 (times broaden^2).
/// Deterministic for a given seed.
inline std::vector<PhaseSample> sample_phase_space(const GaussianPacket& packet, std::size_t n, std::uint64_t seed,
                                                   double hbar, const SamplerOptions& opt = {}) {
  if (n == 0) throw InvalidArgument("sample_phase_space: N must be >= 1");
  packet.validate();
  if (!(opt.stratify >= 0.0 && opt.stratify < 1.0)) throw InvalidArgument("sample_phase_space: stratify must lie in [0, 1)");
  const double sq = opt.broaden / std::sqrt(packet.gamma);
  const double sp = opt.broaden * std::sqrt(packet.gamma) * hbar;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    PhaseSample s;
    const double zq = unit(rng);
    const double zp = unit(rng);
    s.q = packet.q + sq * zq;
    s.p = packet.p + sp * zp;
    // density of (q, p) is exp(-(zq^2 + zp^2)/2) / (2 pi sq sp)
    const double density = std::exp(-0.5 * (zq * zq + zp * zp)) / (2.0 * std::numbers::pi * sq * sp);
    s.weight = 1.0 / (2.0 * std::numbers::pi * hbar * density);
    if (opt.filter) s.selected = opt.filter(s.q, s.p);
    return s;
  };
  std::vector<PhaseSample> out(n);
  std::size_t n_in = 0;
  for (auto& s : out) {
    s = draw();
    n_in += s.selected;
  }
  const bool stratified = opt.filter && opt.stratify > 0.0 && n_in > 0 && n_in < n;
  if (!stratified) {
    for (auto& s : out) s.weight /= static_cast<double>(n);
    return out;
  }
  // Keep drawing from the same stream until both strata hold their quota.
  const std::size_t want_in = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(opt.stratify * n)), 1, n - 1);
  const std::size_t want_out = n - want_in;
  std::vector<PhaseSample> in, rest;
  std::size_t c_in = 0, c_all = 0;
  auto take = [&](const PhaseSample& s) {
    ++c_all;
    c_in += s.selected;
    if (s.selected && in.size() < want_in) in.push_back(s);
    if (!s.selected && rest.size() < want_out) rest.push_back(s);
  };
  for (const auto& s : out) take(s);
  const std::size_t cap = 1000 * n;
  while ((in.size() < want_in || rest.size() < want_out) && c_all < cap) take(draw());
  const double m_in = static_cast<double>(c_in) / static_cast<double>(c_all);
  for (auto& s : in) s.weight *= m_in / static_cast<double>(in.size());
  for (auto& s : rest) s.weight *= (1.0 - m_in) / static_cast<double>(rest.size());
  out = std::move(in);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

struct PropagationOptions {
  TrajectoryOptions trajectory;
  unsigned threads = 1;
  std::size_t chunk = 256;            // fixed reduction blocks, independent of threads
  double max_failure_fraction = 0.01;
  double broaden = 1.0;
  double stratify = 0.0;  // see SamplerOptions::stratify
};

/// Counters reported alongside a correlation estimate.
struct EnsembleStats {
  std::size_t n_total = 0;
  std::size_t n_failed = 0;
  std::size_t n_greater = 0;   // over-barrier population (incl. parabolic margin)
  std::size_t n_less = 0;      // low-energy population
  std::size_t n_jumped = 0;
  std::size_t n_rerouted = 0;  // low-energy samples that met no usable turning point
  std::string first_failure;
};

struct EnsembleResult {
  CorrelationSeries total;
  CorrelationSeries greater;
  CorrelationSeries less;
  EnsembleStats stats;
  std::vector<std::string> warnings;
};

/// Outcome of evaluating one sample at all requested times.
struct SampleOutcome {
  int population = 0;  // 0: G_>, 1: G_<
  bool jumped = false;
  bool rerouted = false;
  int stratum = 0;  // sampling stratum (1: inside the filter region)
};

namespace detail {

struct PopulationSums {
  std::vector<CompensatedSum<cplx>> sum;
  std::vector<CompensatedSum<double>> sumsq;
  explicit PopulationSums(std::size_t n = 0) : sum(n), sumsq(n) {}
  void add(std::span<const cplx> y) {
    for (std::size_t k = 0; k < y.size(); ++k) {
      sum[k].add(y[k]);
      sumsq[k].add(std::norm(y[k]));
    }
  }
  void merge(const PopulationSums& o) {
    for (std::size_t k = 0; k < sum.size(); ++k) {
      sum[k].add(o.sum[k].value());
      sumsq[k].add(o.sumsq[k].value());
    }
  }
};

struct BlockSums {
  PopulationSums total, greater, less;
  std::array<PopulationSums, 2> strata;
  std::array<std::size_t, 2> strata_n{};
  EnsembleStats stats;
  explicit BlockSums(std::size_t n = 0) : total(n), greater(n), less(n), strata{PopulationSums(n), PopulationSums(n)} {}
};

inline CorrelationSeries finish(const PopulationSums& s, std::span<const double> times, double n_ok) {
  CorrelationSeries out;
  out.times.assign(times.begin(), times.end());
  out.values.resize(times.size());
  out.std_error.emplace(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const cplx mean = s.sum[k].value() / n_ok;
    const double var = std::max(s.sumsq[k].value() / n_ok - std::norm(mean), 0.0);
    out.values[k] = mean;
    (*out.std_error)[k] = std::sqrt(var / n_ok);
  }
  return out;
}

/// Standard error of a stratified estimate: Y_j carries N * weight, so the
/// variance is sum_s N_s var_s(Y) / N^2.
inline void stratified_error(CorrelationSeries& out, const BlockSums& all, double n_ok) {
  for (std::size_t k = 0; k < out.size(); ++k) {
    double var = 0.0;
    for (std::size_t s = 0; s < 2; ++s) {
      const double ns = static_cast<double>(all.strata_n[s]);
      if (ns == 0.0) continue;
      const cplx mean = all.strata[s].sum[k].value() / ns;
      var += std::max(all.strata[s].sumsq[k].value() - ns * std::norm(mean), 0.0);
    }
    (*out.std_error)[k] = std::sqrt(var) / n_ok;
  }
}

}  // namespace detail

/// Accumulates per-sample contributions Y_j(t) into mean and standard error.
/// `eval(j, out)` fills out[k] with Y_j(times[k]) and returns its outcome;
/// library errors thrown by it mark the sample as failed. Summation runs in
/// fixed blocks reduced in block order, so the result does not depend on the
/// number of workers.
template <class Eval>
EnsembleResult accumulate_ensemble(std::size_t n_samples, std::span<const double> times,
                                   const PropagationOptions& opt, Eval&& eval) {
  const std::size_t nt = times.size();
  const std::size_t chunk = std::max<std::size_t>(opt.chunk, 1);
  const std::size_t n_blocks = (n_samples + chunk - 1) / chunk;
  std::vector<detail::BlockSums> blocks(n_blocks);
  parallel_for(n_blocks, opt.threads, [&](std::size_t b) {
    detail::BlockSums sums(nt);
    std::vector<cplx> y(nt);
    const std::size_t end = std::min(n_samples, (b + 1) * chunk);
    for (std::size_t j = b * chunk; j < end; ++j) {
      std::fill(y.begin(), y.end(), cplx{});
      ++sums.stats.n_total;
      try {
        const SampleOutcome o = eval(j, std::span<cplx>(y));
        sums.total.add(y);
        sums.strata[o.stratum != 0].add(y);
        ++sums.strata_n[o.stratum != 0];
        (o.population == 0 ? sums.greater : sums.less).add(y);
        ++(o.population == 0 ? sums.stats.n_greater : sums.stats.n_less);
        sums.stats.n_jumped += o.jumped;
        sums.stats.n_rerouted += o.rerouted;
      } catch (const Error& e) {
        if (sums.stats.n_failed++ == 0) sums.stats.first_failure = e.code() + ": " + e.what();
      }
    }
    blocks[b] = std::move(sums);
  });

  detail::BlockSums all(nt);
  for (const auto& b : blocks) {
    all.total.merge(b.total);
    all.greater.merge(b.greater);
    all.less.merge(b.less);
    for (std::size_t s = 0; s < 2; ++s) {
      all.strata[s].merge(b.strata[s]);
      all.strata_n[s] += b.strata_n[s];
    }
    all.stats.n_total += b.stats.n_total;
    all.stats.n_greater += b.stats.n_greater;
    all.stats.n_less += b.stats.n_less;
    all.stats.n_jumped += b.stats.n_jumped;
    all.stats.n_rerouted += b.stats.n_rerouted;
    if (all.stats.n_failed == 0 && b.stats.n_failed > 0) all.stats.first_failure = b.stats.first_failure;
    all.stats.n_failed += b.stats.n_failed;
  }
  if (static_cast<double>(all.stats.n_failed) > opt.max_failure_fraction * static_cast<double>(n_samples)) {
    throw TrajectoryBudgetExceeded(std::to_string(all.stats.n_failed) + " of " + std::to_string(n_samples) +
                                   " trajectories failed; first: " + all.stats.first_failure);
  }
  const double n_ok = static_cast<double>(n_samples - all.stats.n_failed);
  EnsembleResult res;
  res.total = detail::finish(all.total, times, n_ok);
  if (opt.stratify > 0.0 && all.strata_n[0] > 0 && all.strata_n[1] > 0) detail::stratified_error(res.total, all, n_ok);
  res.greater = detail::finish(all.greater, times, n_ok);
  res.less = detail::finish(all.less, times, n_ok);
  res.stats = all.stats;
  return res;
}

/// Per-sample HK integrand at the stored points, scaled by N * weight so the
/// ensemble mean is the correlation estimate. The t = 0 entry is handled by
/// the callers with the exact overlap.
inline void hk_terms(const PhaseSample& s, std::size_t n, std::span<const PhasePoint> pts, const GaussianPacket& psi_i,
                     const GaussianPacket& psi_f, double hbar, cplx extra, std::span<cplx> out) {
  const double gamma = psi_i.gamma;
  const cplx in = coherent_overlap(GaussianPacket{gamma, s.q, s.p}, psi_i, hbar);
  const double scale = static_cast<double>(n) * s.weight;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const PhasePoint& pt = pts[k];
    const cplx fin = coherent_overlap(psi_f, GaussianPacket{gamma, pt.q, pt.p}, hbar);
    out[k] = scale * fin * pt.prefactor * std::exp(cplx(0.0, pt.action / hbar)) * in * extra;
  }
}

/// Replaces the t = 0 entries of a series by the exact overlap <psi_f|psi_i>.
inline void pin_initial_overlap(EnsembleResult& r, const GaussianPacket& psi_i, const GaussianPacket& psi_f,
                                double hbar) {
  for (std::size_t k = 0; k < r.total.size(); ++k) {
    if (r.total.times[k] != 0.0) continue;
    r.total.values[k] = coherent_overlap(psi_f, psi_i, hbar);
    (*r.total.std_error)[k] = 0.0;
  }
}

inline void check_times(std::span<const double> times) {
  if (times.empty()) throw InvalidArgument("no correlation times requested");
  if (times.front() < 0.0) throw InvalidArgument("correlation times must be non-negative");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InvalidArgument("correlation times must be strictly increasing");
  }
}

/// Plain Herman-Kluk estimate of c_fi(t) = <psi_f|exp(-iHt/hbar)|psi_i>.
inline EnsembleResult hk_correlation(const PotentialSpec& spec, const GaussianPacket& psi_i,
                                     const GaussianPacket& psi_f, std::span<const double> times, std::size_t n,
                                     std::uint64_t seed, double hbar, const PropagationOptions& opt = {}) {
  spec.validate();
  psi_i.validate();
  psi_f.validate();
  check_times(times);
  SamplerOptions sopt;
  sopt.broaden = opt.broaden;
  const auto samples = sample_phase_space(psi_i, n, seed, hbar, sopt);
  auto res = accumulate_ensemble(n, times, opt, [&](std::size_t j, std::span<cplx> y) {
    const PhaseSample& s = samples[j];
    NoEvents none;
    const auto pts = run_trajectory(spec, s.q, s.p, times, hbar, psi_i.gamma, opt.trajectory, none);
    hk_terms(s, n, pts, psi_i, psi_f, hbar, 1.0, y);
    return SampleOutcome{};
  });
  pin_initial_overlap(res, psi_i, psi_f, hbar);
  return res;
}

}  // namespace ehk
