#pragma once

// Exact reference dynamics on a periodic Fourier grid (Strang split
// operator with FFTW), optional quartic complex absorbing potential, the
// closed-form Eckart transmission and a wave-packet transmission scan.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "ehk/packet.hpp"
#include "ehk/potential.hpp"
#include "ehk/series.hpp"

namespace ehk {

struct GridState {
  double x_min = 0.0;
  double x_max = 0.0;
  std::vector<cplx> amplitudes;
  double t = 0.0;

  std::size_t n() const { return amplitudes.size(); }
  double dx() const { return (x_max - x_min) / static_cast<double>(n()); }
  double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx(); }

  double norm() const {
    double s = 0.0;
    for (const cplx& a : amplitudes) s += std::norm(a);
    return s * dx();
  }

  static GridState from_packet(const GaussianPacket& g, double x_min, double x_max, std::size_t n, double hbar) {
    if (n < 2 || (n & (n - 1)) != 0) throw InvalidArgument("grid size must be a power of two");
    if (!(x_max > x_min)) throw InvalidArgument("grid: x_max must exceed x_min");
    GridState s{x_min, x_max, std::vector<cplx>(n), 0.0};
    for (std::size_t j = 0; j < n; ++j) s.amplitudes[j] = g(s.x(j), hbar);
    return s;
  }

  /// sum_j conj(g(x_j)) psi_j dx
  cplx project(const GaussianPacket& g, double hbar) const {
    cplx acc{};
    for (std::size_t j = 0; j < n(); ++j) acc += std::conj(g(x(j), hbar)) * amplitudes[j];
    return acc * dx();
  }
};

struct GridConfig {
  std::size_t n = 4096;
  std::optional<double> half_width;  // default 1.5 max(|q_i|, |q_f|) + 20 / sqrt(gamma)
  double dt = 0.01;
  bool absorber = true;
  double absorber_fraction = 0.1;         // outer fraction of the grid on each side
  std::optional<double> absorber_strength;  // auto-tuned when unset
  double edge_threshold = 1e-8;           // wraparound mass limit without absorber
  double target_leakage = 1e-6;           // absorber reflection + transmission at tuning
  bool grow = true;                       // widen the grid until the target is met
  double max_growth = 8.0;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// In-place forward/backward transforms of one fixed size. Only plan creation
// and destruction touch FFTW's global state.
class FftPair {
 public:
  explicit FftPair(std::size_t n) : n_(n), buf_(n) {
    std::lock_guard lock(fftw_planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
    fwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;
  ~FftPair() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }

  void forward(std::vector<cplx>& v) const { exec(fwd_, v); }
  void backward(std::vector<cplx>& v) const { exec(bwd_, v); }

 private:
  void exec(fftw_plan plan, std::vector<cplx>& v) const {
    auto* p = reinterpret_cast<fftw_complex*>(v.data());
    fftw_execute_dft(plan, p, p);
  }
  std::size_t n_;
  std::vector<cplx> buf_;
  fftw_plan fwd_{};
  fftw_plan bwd_{};
};

inline double wave_number(std::size_t j, std::size_t n, double length) {
  const double jj = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
  return 2.0 * std::numbers::pi * jj / length;
}

// Quartic ramp profile s^4 in the outer `fraction` of [x_min, x_max).
inline double absorber_profile(double x, double x_min, double x_max, double fraction) {
  const double w = fraction * (x_max - x_min);
  double s = 0.0;
  if (x < x_min + w) s = (x_min + w - x) / w;
  if (x > x_max - w) s = (x - (x_max - w)) / w;
  return s * s * s * s;
}

}  // namespace detail

/// Reflection plus transmission of a plane wave of momentum p through the
/// periodic absorber (ramp up to the grid edge and down on the other side),
/// from the stationary equation -hbar^2/2 psi'' - i eta f(x) psi = E psi.
inline double absorber_leakage(double eta, double width, double p, double hbar) {
  const double k = p / hbar;
  const double e = 0.5 * p * p;
  const int steps = std::max(2000, static_cast<int>(40.0 * 2.0 * width * std::max(k, 1.0)));
  const double h = 2.0 * width / steps;
  auto profile = [&](double x) {
    const double s = x < width ? x / width : (2.0 * width - x) / width;
    return s * s * s * s;
  };
  // y = (psi, psi'), integrated backward from a purely outgoing wave at 2w.
  using V2 = std::array<cplx, 2>;
  auto f = [&](double x, const V2& y) {
    const cplx coeff = -2.0 / (hbar * hbar) * (e + cplx(0.0, eta * profile(x)));
    return V2{y[1], coeff * y[0]};
  };
  double x = 2.0 * width;
  const cplx out = std::exp(cplx(0.0, k * x));
  V2 y{out, cplx(0.0, k) * out};
  for (int i = 0; i < steps; ++i) {
    auto add = [](const V2& a, const V2& b, double s) { return V2{a[0] + s * b[0], a[1] + s * b[1]}; };
    const V2 k1 = f(x, y);
    const V2 k2 = f(x - 0.5 * h, add(y, k1, -0.5 * h));
    const V2 k3 = f(x - 0.5 * h, add(y, k2, -0.5 * h));
    const V2 k4 = f(x - h, add(y, k3, -h));
    for (int c = 0; c < 2; ++c) y[c] -= h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    x -= h;
  }
  // psi = A e^{ikx} + B e^{-ikx} at x = 0
  const cplx a = 0.5 * (y[0] + y[1] / cplx(0.0, k));
  const cplx b = 0.5 * (y[0] - y[1] / cplx(0.0, k));
  if (!std::isfinite(std::abs(a)) || std::abs(a) == 0.0) return 1.0;
  return std::norm(b / a) + std::norm(1.0 / a);
}

struct AbsorberTuning {
  double strength = 0.0;
  double leakage = 1.0;
};

/// Scans eta over a log grid and keeps the value whose worst leakage over
/// the momentum range [p_lo, p_hi] is smallest.
inline AbsorberTuning tune_absorber(double width, double p_lo, double p_hi, double hbar) {
  AbsorberTuning best;
  const double e = 0.5 * p_hi * p_hi;
  constexpr int n_p = 8;
  for (int i = 0; i <= 60; ++i) {
    const double eta = e * std::pow(10.0, -3.0 + 4.0 * i / 60.0);
    double worst = 0.0;
    for (int j = 0; j <= n_p && worst < best.leakage; ++j) {
      const double p = p_lo + (p_hi - p_lo) * j / n_p;
      worst = std::max(worst, absorber_leakage(eta, width, p, hbar));
    }
    if (worst < best.leakage) best = {eta, worst};
  }
  return best;
}

/// Second-order Strang propagator e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2}, with
/// the potential taken at the midpoint of each step when driven.
class SplitOperator {
 public:
  SplitOperator(const PotentialSpec& spec, double x_min, double x_max, std::size_t n, double hbar,
                std::optional<double> absorber_strength = std::nullopt, double absorber_fraction = 0.1)
      : spec_(spec), x_min_(x_min), x_max_(x_max), n_(n), hbar_(hbar), fft_(n), x_(n), v_(n), k2_(n), w_(n, 0.0) {
    const double dx = (x_max - x_min) / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      x_[j] = x_min + static_cast<double>(j) * dx;
      v_[j] = detail::barrier(spec, x_[j]).v;
      const double k = detail::wave_number(j, n, x_max - x_min);
      k2_[j] = k * k;
      if (absorber_strength) w_[j] = *absorber_strength * detail::absorber_profile(x_[j], x_min, x_max, absorber_fraction);
    }
  }

  /// Advances `s` to time t_end with steps of at most dt.
  void advance(GridState& s, double t_end, double dt) {
    if (s.n() != n_) throw InvalidArgument("split operator: grid size mismatch");
    while (s.t < t_end - 1e-12 * std::max(1.0, t_end)) {
      const double h = std::min(dt, t_end - s.t);
      step(s.amplitudes, s.t, h);
      s.t += h;
    }
    s.t = std::max(s.t, t_end);
  }

  std::span<const double> positions() const { return x_; }

 private:
  void step(std::vector<cplx>& psi, double t, double h) {
    if (spec_.driven() || h != cached_h_) refresh(t + 0.5 * h, h);
    for (std::size_t j = 0; j < n_; ++j) psi[j] *= half_v_[j];
    fft_.forward(psi);
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t j = 0; j < n_; ++j) psi[j] *= kin_[j] * inv_n;
    fft_.backward(psi);
    for (std::size_t j = 0; j < n_; ++j) psi[j] *= half_v_[j];
  }

  void refresh(double t_mid, double h) {
    half_v_.resize(n_);
    const double tilt = drive_tilt(spec_, t_mid);
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = v_[j] + x_[j] * tilt;
      half_v_[j] = std::exp(cplx(-w_[j], -v) * (0.5 * h / hbar_));
    }
    if (h != cached_h_) {
      kin_.resize(n_);
      for (std::size_t j = 0; j < n_; ++j) kin_[j] = std::exp(cplx(0.0, -0.5 * hbar_ * k2_[j] * h));
    }
    cached_h_ = h;
  }

  PotentialSpec spec_;
  double x_min_, x_max_;
  std::size_t n_;
  double hbar_;
  detail::FftPair fft_;
  std::vector<double> x_, v_, k2_, w_;
  std::vector<cplx> half_v_, kin_;
  double cached_h_ = -1.0;
};

/// Mass in the outer 2% of the grid on either side.
inline double edge_mass(const GridState& s) {
  const std::size_t m = std::max<std::size_t>(1, s.n() / 50);
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) acc += std::norm(s.amplitudes[j]) + std::norm(s.amplitudes[s.n() - 1 - j]);
  return acc * s.dx();
}

/// Propagates psi0 and returns copies of the state at each requested time.
/// Without an absorber, EdgeContamination is raised once the edge mass
/// exceeds `edge_threshold`.
inline std::vector<GridState> grid_propagate(const PotentialSpec& spec, GridState psi0, std::span<const double> times,
                                             double dt, double hbar, std::optional<double> absorber_strength = {},
                                             double absorber_fraction = 0.1, double edge_threshold = 1e-8) {
  if (!(dt > 0.0)) throw InvalidArgument("grid_propagate: dt must be positive");
  if (spec.driven() && spec.drive->omega > 0.0 && dt > 2.0 * std::numbers::pi / (50.0 * spec.drive->omega)) {
    throw InvalidArgument("grid_propagate: dt does not resolve the drive period");
  }
  SplitOperator op(spec, psi0.x_min, psi0.x_max, psi0.n(), hbar, absorber_strength, absorber_fraction);
  std::vector<GridState> out;
  out.reserve(times.size());
  for (double t : times) {
    if (t < psi0.t) throw InvalidArgument("grid_propagate: times must be ascending");
    op.advance(psi0, t, dt);
    if (!absorber_strength && edge_mass(psi0) > edge_threshold) {
      throw EdgeContamination("wraparound mass " + std::to_string(edge_mass(psi0)) + " at t = " + std::to_string(t));
    }
    out.push_back(psi0);
  }
  return out;
}

/// Resolved grid layout for a correlation run.
struct GridLayout {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t n = 0;
  std::optional<double> absorber_strength;
  double absorber_leakage = 0.0;
};

/// Grid for a correlation run. With an auto-tuned absorber the grid is
/// widened (at fixed spacing) until the tuned leakage meets the target.
inline GridLayout resolve_grid(const GridConfig& cfg, const GaussianPacket& psi_i, const GaussianPacket& psi_f,
                               double hbar) {
  const double sigma = 1.0 / std::sqrt(std::min(psi_i.gamma, psi_f.gamma));
  const double half0 = cfg.half_width.value_or(1.5 * std::max(std::abs(psi_i.q), std::abs(psi_f.q)) + 20.0 * sigma);
  if ((cfg.n & (cfg.n - 1)) != 0 || cfg.n < 16) throw InvalidArgument("grid size must be a power of two >= 16");
  const double frac = cfg.absorber ? cfg.absorber_fraction : 0.0;
  if (!(frac >= 0.0 && frac < 0.5)) throw InvalidArgument("absorber fraction must lie in [0, 0.5)");
  const double inner = half0 * (1.0 - 2.0 * frac);
  for (const auto* p : {&psi_i, &psi_f}) {
    if (std::abs(p->q) + 8.0 * sigma > inner) throw InvalidArgument("grid does not cover the packets with an 8 sigma margin");
  }
  const double dx0 = 2.0 * half0 / static_cast<double>(cfg.n);
  const double k_need = std::max(std::abs(psi_i.p), std::abs(psi_f.p)) / hbar +
                        10.0 * std::sqrt(std::max(psi_i.gamma, psi_f.gamma));
  if (k_need > std::numbers::pi / dx0) throw InvalidArgument("grid too coarse for the packet momenta");

  GridLayout g{-half0, half0, cfg.n, {}, 0.0};
  if (!cfg.absorber) return g;
  if (cfg.absorber_strength) {
    g.absorber_strength = cfg.absorber_strength;
    g.absorber_leakage =
        absorber_leakage(*cfg.absorber_strength, frac * 2.0 * half0, std::max(std::abs(psi_i.p), 1e-3), hbar);
    return g;
  }
  // Momenta the scattered packets carry: the incoming band, trimmed at the
  // slow end where no finite ramp can absorb.
  const double c = std::abs(psi_i.p), sp = std::sqrt(psi_i.gamma) * hbar;
  const double p_lo = std::max({0.25 * c, c - 2.0 * sp, 1e-3});
  const double p_hi = std::max(c + 3.0 * sp, 2e-3);
  for (double half = half0;; half *= 1.25) {
    std::size_t n = cfg.n;
    while (2.0 * half / static_cast<double>(n) > dx0 * (1.0 + 1e-12)) n *= 2;
    const AbsorberTuning tune = tune_absorber(frac * 2.0 * half, p_lo, p_hi, hbar);
    g = {-half, half, n, tune.strength, tune.leakage};
    if (!cfg.grow || tune.leakage <= cfg.target_leakage || half * 1.25 > cfg.max_growth * half0) break;
  }
  return g;
}

/// c_fi(t) = <psi_f| exp(-iHt/hbar) |psi_i> on the grid.
inline CorrelationSeries oracle_correlation(const PotentialSpec& spec, const GaussianPacket& psi_i,
                                            const GaussianPacket& psi_f, std::span<const double> times,
                                            const GridConfig& cfg, double hbar, GridLayout* layout_out = nullptr) {
  spec.validate();
  psi_i.validate();
  psi_f.validate();
  const GridLayout g = resolve_grid(cfg, psi_i, psi_f, hbar);
  if (layout_out) *layout_out = g;
  GridState s = GridState::from_packet(psi_i, g.x_min, g.x_max, g.n, hbar);
  if (spec.driven() && spec.drive->omega > 0.0 && cfg.dt > 2.0 * std::numbers::pi / (50.0 * spec.drive->omega)) {
    throw InvalidArgument("oracle: dt does not resolve the drive period");
  }
  SplitOperator op(spec, g.x_min, g.x_max, g.n, hbar, g.absorber_strength, cfg.absorber_fraction);
  // Projection onto psi_f sampled once on the grid.
  std::vector<cplx> f(g.n);
  for (std::size_t j = 0; j < g.n; ++j) f[j] = std::conj(psi_f(s.x(j), hbar)) * s.dx();
  CorrelationSeries out;
  out.times.assign(times.begin(), times.end());
  out.values.reserve(times.size());
  for (double t : times) {
    if (t < s.t) throw InvalidArgument("oracle: times must be ascending");
    op.advance(s, t, cfg.dt);
    if (!g.absorber_strength && edge_mass(s) > cfg.edge_threshold) {
      throw EdgeContamination("wraparound mass " + std::to_string(edge_mass(s)) + " at t = " + std::to_string(t));
    }
    cplx acc{};
    for (std::size_t j = 0; j < g.n; ++j) acc += f[j] * s.amplitudes[j];
    out.values.push_back(acc);
  }
  return out;
}

/// Closed-form Eckart transmission
///   P = sinh^2(pi k l) / (sinh^2(pi k l) + cosh^2(pi/2 sqrt(8 m V0 l^2/hbar^2 - 1))),
/// k = sqrt(2 m E)/hbar, evaluated in log form so deep tunnelling does not
/// underflow prematurely. For 8 m V0 l^2/hbar^2 < 1 the cosh becomes a cos.
inline double exact_eckart_transmission(double v0, double l, double energy, double hbar, double m = 1.0) {
  if (!(energy > 0.0)) return 0.0;
  const double a = std::numbers::pi * std::sqrt(2.0 * m * energy) / hbar * l;
  const double d = 8.0 * m * v0 * l * l / (hbar * hbar) - 1.0;
  // log sinh a
  const double log_sinh = a + std::log1p(-std::exp(-2.0 * a)) - std::numbers::ln2;
  double ratio;  // cosh^2(b) / sinh^2(a)
  if (d >= 0.0) {
    const double b = 0.5 * std::numbers::pi * std::sqrt(d);
    const double log_cosh = b + std::log1p(std::exp(-2.0 * b)) - std::numbers::ln2;
    ratio = std::exp(2.0 * (log_cosh - log_sinh));
  } else {
    const double c = std::cos(0.5 * std::numbers::pi * std::sqrt(-d));
    ratio = c * c * std::exp(-2.0 * log_sinh);
  }
  return 1.0 / (1.0 + ratio);
}

/// Options for the wave-packet transmission scan.
struct ScanOptions {
  double sigma_p = 0.25;  // momentum width of each probe packet
  double dt = 0.005;
  double barrier_reach = 15.0;  // |x| in units of l beyond which V is treated as zero
};

/// Transmission from free wave-packet scattering: a narrow-band packet is
/// sent onto the barrier from the right, and once the transmitted part has
/// left the barrier region P(E) = |phi_T(-p)|^2 / |phi_0(-p)|^2 by energy
/// conservation. Several probe packets cover [e_lo, e_hi].
inline TransmissionCurve grid_transmission_scan(const PotentialSpec& spec, double e_lo, double e_hi, double hbar,
                                                const ScanOptions& opt = {}) {
  spec.validate();
  if (!(e_lo > 0.0 && e_hi > e_lo)) throw InvalidArgument("transmission scan: need 0 < e_lo < e_hi");
  const double p_lo = std::sqrt(2.0 * e_lo), p_hi = std::sqrt(2.0 * e_hi);
  const double spacing = 2.0 * opt.sigma_p;
  const int packets = std::max(1, static_cast<int>(std::ceil((p_hi - p_lo) / spacing)));
  const double gamma = std::pow(opt.sigma_p / hbar, 2);
  const double sigma_x = 1.0 / std::sqrt(gamma);
  const double reach = opt.barrier_reach * spec.l;

  TransmissionCurve curve;
  curve.method = Method::gridFlux;
  for (int i = 0; i < packets; ++i) {
    const double c_lo = p_lo + i * spacing;
    const double c_hi = std::min(p_hi, c_lo + spacing);
    const double p0 = 0.5 * (c_lo + c_hi);
    const double p_min = std::max(p0 - 4.0 * opt.sigma_p, 0.3 * p0);
    const double p_max = p0 + 6.0 * opt.sigma_p;
    const double q0 = reach + 8.0 * sigma_x;
    const double t_final = (q0 + reach + 8.0 * sigma_x) / p_min;
    const double half = std::max(p_max * t_final - q0, q0) + 12.0 * sigma_x;
    const double dx_need = std::numbers::pi * hbar / (4.0 * p_max);
    std::size_t n = 1024;
    while (2.0 * half / static_cast<double>(n) > std::min(dx_need, 0.1 * spec.l)) n *= 2;

    const GaussianPacket g{gamma, q0, -p0};
    GridState s = GridState::from_packet(g, -half, half, n, hbar);
    SplitOperator op(spec, -half, half, n, hbar);
    op.advance(s, t_final, opt.dt);
    if (edge_mass(s) > 1e-10) throw EdgeContamination("transmission scan: packet reached the grid edge");

    // Transmitted part only.
    std::vector<cplx> psi(n);
    for (std::size_t j = 0; j < n; ++j) psi[j] = s.x(j) < 0.0 ? s.amplitudes[j] : cplx{};
    detail::FftPair fft(n);
    fft.forward(psi);
    const double dx = s.dx();
    for (std::size_t j = 0; j < n; ++j) {
      const double p = -hbar * detail::wave_number(j, n, 2.0 * half);  // leftward momenta are negative k
      if (p < c_lo || p > c_hi) continue;
      // |phi_T(-p)| = |sum_j psi_j e^{-i(-p)x_j/hbar}| dx / sqrt(2 pi hbar); the FFT phase offset drops out.
      const double num = std::norm(psi[j]) * dx * dx / (2.0 * std::numbers::pi * hbar);
      const double den = std::norm(momentum_amplitude(g, -p, hbar));
      curve.energies.push_back(0.5 * p * p);
      curve.p.push_back(num / den);
    }
  }
  // Packets are processed in increasing momentum; sort within the union anyway.
  std::vector<std::size_t> idx(curve.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return curve.energies[a] < curve.energies[b]; });
  TransmissionCurve sorted;
  sorted.method = curve.method;
  for (std::size_t i : idx) {
    sorted.energies.push_back(curve.energies[i]);
    sorted.p.push_back(curve.p[i]);
  }
  return sorted;
}

namespace detail {

inline void put_le(std::ostream& os, std::uint64_t bits) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline std::uint64_t get_le(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw InvalidArgument("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

/// Binary checkpoint: uint64 n, float64 x_min, x_max, t, then n (re, im)
/// pairs of float64, all little-endian.
inline void write_checkpoint(std::ostream& os, const GridState& s) {
  detail::put_le(os, s.n());
  for (double v : {s.x_min, s.x_max, s.t}) detail::put_le(os, std::bit_cast<std::uint64_t>(v));
  for (const cplx& a : s.amplitudes) {
    detail::put_le(os, std::bit_cast<std::uint64_t>(a.real()));
    detail::put_le(os, std::bit_cast<std::uint64_t>(a.imag()));
  }
}

inline GridState read_checkpoint(std::istream& is) {
  GridState s;
  const std::uint64_t n = detail::get_le(is);
  if (n < 2 || n > (std::uint64_t{1} << 32) || (n & (n - 1)) != 0) throw InvalidArgument("checkpoint: bad grid size");
  s.x_min = std::bit_cast<double>(detail::get_le(is));
  s.x_max = std::bit_cast<double>(detail::get_le(is));
  s.t = std::bit_cast<double>(detail::get_le(is));
  s.amplitudes.resize(n);
  for (auto& a : s.amplitudes) {
    const double re = std::bit_cast<double>(detail::get_le(is));
    const double im = std::bit_cast<double>(detail::get_le(is));
    a = {re, im};
  }
  return s;
}

}  // namespace ehk
