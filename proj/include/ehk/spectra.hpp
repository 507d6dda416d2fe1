#pragma once

// Energy-resolved transmission from a wave-packet correlation function:
//   c~(E) = int_0^T dt e^{iEt/hbar} w(t) c_fi(t),
//   S(E)  = c~(E) / (2 pi hbar eta_f(E)^* eta_i(E)),   P(E) = |S(E)|^2,
// with eta(E) = sqrt(m/p) phi(+-p), p = sqrt(2mE), the sign following the
// packet's direction of motion. This normalization gives S = 1 for free
// motion between packets that do not overlap at negative times.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ehk/packet.hpp"
#include "ehk/series.hpp"

namespace ehk {

struct SpectrumOptions {
  bool taper = true;
  double taper_fraction = 0.2;  // half-cosine over the final part of the series
  std::size_t n_energies = 400;
  std::optional<std::pair<double, double>> energy_range;  // default: resolvable band
  double band_threshold = 1e-3;  // relative |phi| below which energies are unresolvable
};

/// sqrt(m/p) phi(sign p) for m = 1, sign taken from the packet momentum.
inline cplx energy_amplitude(const GaussianPacket& g, double energy, double hbar) {
  const double p = std::sqrt(2.0 * energy);
  const double sign = g.p < 0.0 ? -1.0 : 1.0;
  return std::sqrt(1.0 / p) * momentum_amplitude(g, sign * p, hbar);
}

/// Energies at which both packets keep |phi| above `threshold` times the
/// peak of |phi| along their direction of motion.
inline std::pair<double, double> resolvable_band(const GaussianPacket& psi_i, const GaussianPacket& psi_f, double hbar,
                                                 double threshold = 1e-3) {
  auto p_range = [&](const GaussianPacket& g) {
    // |phi(s p)| / max = exp(-(p - |p0|)^2 / (2 gamma hbar^2)) for p > 0
    const double half = std::sqrt(-2.0 * g.gamma * hbar * hbar * std::log(threshold));
    const double c = std::abs(g.p);
    return std::pair{std::max(c - half, 0.0), c + half};
  };
  const auto [a0, a1] = p_range(psi_i);
  const auto [b0, b1] = p_range(psi_f);
  const double lo = std::max(a0, b0), hi = std::min(a1, b1);
  if ((psi_i.p < 0.0) != (psi_f.p < 0.0) || !(hi > lo)) {
    throw BandExceeded("packets share no resolvable energy band");
  }
  // E = 0 itself is excluded: the amplitudes carry 1/sqrt(p).
  return {std::max(0.5 * lo * lo, 1e-6 * 0.5 * hi * hi), 0.5 * hi * hi};
}

/// Taper weights w(t) for the series.
inline std::vector<double> taper_weights(const std::vector<double>& times, const SpectrumOptions& opt) {
  std::vector<double> w(times.size(), 1.0);
  if (!opt.taper || times.size() < 2) return w;
  const double t0 = times.front(), t1 = times.back();
  const double start = t1 - opt.taper_fraction * (t1 - t0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] > start) w[k] = 0.5 * (1.0 + std::cos(std::numbers::pi * (times[k] - start) / (t1 - start)));
  }
  return w;
}

/// Windowed trapezoidal transform c~(E) of the series at one energy.
inline cplx correlation_transform(const CorrelationSeries& s, const std::vector<double>& w, double energy, double hbar) {
  cplx acc{};
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double h = s.times[k + 1] - s.times[k];
    const cplx a = w[k] * s.values[k] * std::exp(cplx(0.0, energy * s.times[k] / hbar));
    const cplx b = w[k + 1] * s.values[k + 1] * std::exp(cplx(0.0, energy * s.times[k + 1] / hbar));
    acc += 0.5 * h * (a + b);
  }
  return acc;
}

inline TransmissionCurve transmission_from_correlation(const CorrelationSeries& series, const GaussianPacket& psi_i,
                                                       const GaussianPacket& psi_f, double hbar,
                                                       const SpectrumOptions& opt = {}, Method method = Method::eHK) {
  series.validate();
  if (series.size() < 2) throw InvalidArgument("transmission: series needs at least two points");
  if (!opt.taper) {
    double peak = 0.0;
    for (const cplx& v : series.values) peak = std::max(peak, std::abs(v));
    if (std::abs(series.values.back()) > 1e-3 * peak) {
      throw InsufficientDecay("|c(t_max)| is above 1e-3 of its peak and no taper is set");
    }
  }
  const auto band = resolvable_band(psi_i, psi_f, hbar, opt.band_threshold);
  std::pair<double, double> range = opt.energy_range.value_or(band);
  if (range.first < band.first * (1.0 - 1e-12) || range.second > band.second * (1.0 + 1e-12) ||
      !(range.second > range.first)) {
    throw BandExceeded("requested energies [" + std::to_string(range.first) + ", " + std::to_string(range.second) +
                       "] leave the resolvable band [" + std::to_string(band.first) + ", " +
                       std::to_string(band.second) + "]");
  }
  const std::size_t n = std::max<std::size_t>(opt.n_energies, 2);
  const auto w = taper_weights(series.times, opt);
  TransmissionCurve out;
  out.method = method;
  out.energies.resize(n);
  out.p.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::min(range.second,
                              range.first + (range.second - range.first) * static_cast<double>(i) / static_cast<double>(n - 1));
    const cplx ct = correlation_transform(series, w, e, hbar);
    const cplx denom = 2.0 * std::numbers::pi * hbar * std::conj(energy_amplitude(psi_f, e, hbar)) *
                       energy_amplitude(psi_i, e, hbar);
    out.energies[i] = e;
    out.p[i] = std::norm(ct / denom);
  }
  return out;
}

/// Samples a closed-form transmission function on a uniform energy grid.
template <class F>
TransmissionCurve sample_transmission(F&& f, double e_lo, double e_hi, std::size_t n, Method method) {
  TransmissionCurve out;
  out.method = method;
  n = std::max<std::size_t>(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = e_lo + (e_hi - e_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.energies.push_back(e);
    out.p.push_back(f(e));
  }
  return out;
}

}  // namespace ehk
