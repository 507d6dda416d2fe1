#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "ehk/error.hpp"

namespace ehk {

using cplx = std::complex<double>;

/// <x|gamma(p,q)> = (gamma/pi)^{1/4} exp(-gamma/2 (x-q)^2 + i p (x-q)/hbar).
struct GaussianPacket {
  double gamma = 1.0;
  double q = 0.0;
  double p = 0.0;

  cplx operator()(double x, double hbar) const {
    const double d = x - q;
    return std::pow(gamma / std::numbers::pi, 0.25) * std::exp(cplx(-0.5 * gamma * d * d, p * d / hbar));
  }

  void validate() const {
    if (!(gamma > 0.0)) throw InvalidArgument("packet width gamma must be positive");
  }
};

/// Closed-form <a|b> for two Gaussian packets of arbitrary widths.
inline cplx coherent_overlap(const GaussianPacket& a, const GaussianPacket& b, double hbar) {
  const double alpha = 0.5 * (a.gamma + b.gamma);
  const cplx beta(a.gamma * a.q + b.gamma * b.q, (b.p - a.p) / hbar);
  const cplx c(-0.5 * (a.gamma * a.q * a.q + b.gamma * b.q * b.q), (a.p * a.q - b.p * b.q) / hbar);
  const double norm = std::pow(a.gamma * b.gamma, 0.25) / std::sqrt(alpha);
  return norm * std::exp(beta * beta / (4.0 * alpha) + c);
}

/// phi(p) = (2 pi hbar)^{-1/2} int dx e^{-ipx/hbar} psi(x)
///        = (pi gamma hbar^2)^{-1/4} exp(-(p-p0)^2/(2 gamma hbar^2) - i p q0/hbar).
inline cplx momentum_amplitude(const GaussianPacket& packet, double p, double hbar) {
  const double d = p - packet.p;
  return std::pow(std::numbers::pi * packet.gamma * hbar * hbar, -0.25) *
         std::exp(cplx(-d * d / (2.0 * packet.gamma * hbar * hbar), -p * packet.q / hbar));
}

}  // namespace ehk
