#pragma once

// Dormand-Prince 5(4) integrator with step-size control and the
// fourth-order continuous extension for dense output.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "ehk/error.hpp"

namespace ehk::ode {

struct Tolerances {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_init = 0.0;      // 0 picks a starting step automatically
  double h_max = std::numeric_limits<double>::infinity();
  double h_min_rel = 1e-14; // relative to max(|t|, 1)
  std::size_t max_steps = 2'000'000;
};

/// Explicit embedded Runge-Kutta stepper. `Rhs` is any callable
/// `void(double t, const State& y, State& dydt)`.
template <std::size_t N, class Rhs>
class Dopri5 {
 public:
  using State = std::array<double, N>;

  Dopri5(Rhs rhs, double t0, const State& y0, Tolerances tol) : rhs_(std::move(rhs)), tol_(tol) {
    restart(t0, y0);
  }

  /// Discards the step history, e.g. after a discontinuous jump of the state.
  void restart(double t0, const State& y0) {
    t_ = t_prev_ = t0;
    y_ = y_prev_ = y0;
    rhs_(t_, y_, k1_);
    h_ = tol_.h_init > 0.0 ? tol_.h_init : initial_step();
    steps_ = 0;
    have_dense_ = false;
  }

  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  const State& y() const { return y_; }
  const State& y_prev() const { return y_prev_; }
  double suggested_step() const { return h_; }
  void set_h_max(double h_max) { tol_.h_max = h_max; }
  std::size_t steps() const { return steps_; }

  /// Advances by one accepted step, never going past `t_stop`.
  void step(double t_stop) {
    const double h_min = tol_.h_min_rel * std::max(std::abs(t_), 1.0);
    double h = std::min({h_, tol_.h_max, t_stop - t_});
    while (true) {
      if (h < h_min && t_stop - t_ > h_min) {
        throw StepFailure("step size underflow at t = " + std::to_string(t_));
      }
      if (++steps_ > tol_.max_steps) throw StepFailure("step budget exhausted at t = " + std::to_string(t_));
      const double err = attempt(h);
      if (err <= 1.0) {
        const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        t_prev_ = t_;
        y_prev_ = y_;
        k1_prev_ = k1_;
        t_ = (t_stop - (t_ + h) <= 1e-15 * std::max(std::abs(t_stop), 1.0)) ? t_stop : t_ + h;
        y_ = y_new_;
        build_dense(h);
        k1_ = k7_;
        h_ = h * fac;
        return;
      }
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
    }
  }

  /// Dense output on [t_prev(), t()].
  State dense(double t) const {
    if (!have_dense_) return y_;
    const double h = t_ - t_prev_;
    const double th = h == 0.0 ? 1.0 : (t - t_prev_) / h;
    const double th1 = 1.0 - th;
    State out;
    for (std::size_t i = 0; i < N; ++i) {
      out[i] = r1_[i] + th * (r2_[i] + th1 * (r3_[i] + th * (r4_[i] + th1 * r5_[i])));
    }
    return out;
  }

  /// Takes a single step of size h from the previous accepted point without
  /// touching the stepper state; used to refine event locations.
  State probe_from_prev(double h) {
    State saved_y = y_;
    double saved_t = t_;
    State saved_k1 = k1_;
    y_ = y_prev_;
    t_ = t_prev_;
    k1_ = k1_prev_;
    attempt(h);
    State out = y_new_;
    y_ = saved_y;
    t_ = saved_t;
    k1_ = saved_k1;
    return out;
  }

 private:
  double initial_step() {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = tol_.atol + tol_.rtol * std::abs(y_[i]);
      d0 += (y_[i] / sc) * (y_[i] / sc);
      d1 += (k1_[i] / sc) * (k1_[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    return std::min(h, tol_.h_max);
  }

  double attempt(double h) {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                            a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    State tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y_[i] + h * a21 * k1_[i];
    rhs_(t_ + h / 5.0, tmp, k2_);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    rhs_(t_ + 3.0 * h / 10.0, tmp, k3_);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    rhs_(t_ + 4.0 * h / 5.0, tmp, k4_);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    rhs_(t_ + 8.0 * h / 9.0, tmp, k5_);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
    rhs_(t_ + h, tmp, k6_);
    for (std::size_t i = 0; i < N; ++i)
      y_new_[i] = y_[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
    rhs_(t_ + h, y_new_, k7_);
    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
      const double sc = tol_.atol + tol_.rtol * std::max(std::abs(y_[i]), std::abs(y_new_[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / N);
    if (!std::isfinite(err)) return 1e10;
    return err;
  }

  void build_dense(double h) {
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double ydiff = y_[i] - y_prev_[i];
      const double bspl = h * k1_prev_[i] - ydiff;
      r1_[i] = y_prev_[i];
      r2_[i] = ydiff;
      r3_[i] = bspl;
      r4_[i] = ydiff - h * k7_[i] - bspl;
      r5_[i] = h * (d1 * k1_prev_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] + d7 * k7_[i]);
    }
    have_dense_ = true;
  }

  Rhs rhs_;
  Tolerances tol_;
  double t_ = 0.0, t_prev_ = 0.0, h_ = 0.0;
  std::size_t steps_ = 0;
  bool have_dense_ = false;
  State y_{}, y_prev_{}, y_new_{};
  State k1_{}, k1_prev_{}, k2_{}, k3_{}, k4_{}, k5_{}, k6_{}, k7_{};
  State r1_{}, r2_{}, r3_{}, r4_{}, r5_{};
};

template <std::size_t N, class Rhs>
Dopri5<N, Rhs> make_dopri5(Rhs rhs, double t0, const std::array<double, N>& y0, Tolerances tol) {
  return Dopri5<N, Rhs>(std::move(rhs), t0, y0, tol);
}

}  // namespace ehk::ode
