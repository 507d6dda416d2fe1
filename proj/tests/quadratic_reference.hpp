#pragma once

// Exact c_fi(t) for quadratic potentials: a Gaussian stays Gaussian,
//   psi_t(x) = exp(i/hbar [alpha (x-q)^2 + p (x-q) + g]),
// with q' = p, p' = -V', alpha' = -2 alpha^2 - V''/2, g' = i hbar alpha + p^2/2 - V.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ehk/packet.hpp"
#include "ehk/potential.hpp"

namespace ehk::reference {

inline std::vector<cplx> quadratic_correlation(const PotentialSpec& spec, const GaussianPacket& psi_i,
                                               const GaussianPacket& psi_f, const std::vector<double>& times,
                                               double hbar) {
  using State = std::array<cplx, 4>;  // q, p, alpha, g
  auto rhs = [&](double t, const State& y) {
    const auto d = eval_real(spec, y[0].real(), t);
    return State{y[1], -d.dv, -2.0 * y[2] * y[2] - 0.5 * d.d2v, cplx(0.0, hbar) * y[2] + 0.5 * y[1] * y[1] - d.v};
  };
  auto overlap = [&](const State& y) {
    const cplx i(0.0, 1.0);
    const double gf = psi_f.gamma, qf = psi_f.q, pf = psi_f.p;
    const cplx q = y[0], p = y[1], al = y[2], g = y[3];
    const cplx a = 0.5 * gf - i * al / hbar;
    const cplx b = gf * qf - i * pf / hbar - 2.0 * i * al * q / hbar + i * p / hbar;
    const cplx c = -0.5 * gf * qf * qf + i * pf * qf / hbar + i * al * q * q / hbar - i * p * q / hbar + i * g / hbar;
    return std::pow(gf / std::numbers::pi, 0.25) * std::sqrt(std::numbers::pi / a) * std::exp(b * b / (4.0 * a) + c);
  };
  State y{psi_i.q, psi_i.p, cplx(0.0, 0.5 * hbar * psi_i.gamma),
          cplx(0.0, -hbar) * std::log(std::pow(psi_i.gamma / std::numbers::pi, 0.25))};
  std::vector<cplx> out;
  double t = 0.0;
  const double h_max = 1e-3;
  for (double target : times) {
    while (t < target) {
      const double h = std::min(h_max, target - t);
      const State k1 = rhs(t, y);
      State tmp;
      for (int j = 0; j < 4; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
      const State k2 = rhs(t + 0.5 * h, tmp);
      for (int j = 0; j < 4; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
      const State k3 = rhs(t + 0.5 * h, tmp);
      for (int j = 0; j < 4; ++j) tmp[j] = y[j] + h * k3[j];
      const State k4 = rhs(t + h, tmp);
      for (int j = 0; j < 4; ++j) y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      t += h;
    }
    out.push_back(overlap(y));
  }
  return out;
}

}  // namespace ehk::reference
