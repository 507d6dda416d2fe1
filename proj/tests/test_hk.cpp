#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ehk/hk.hpp"
#include "quadratic_reference.hpp"

using namespace ehk;

namespace {

struct QuadCase {
  const char* name;
  PotentialSpec spec;
  GaussianPacket psi_i, psi_f;
  double t_max;
};

// max over t of |HK - exact| / stderr; the t = 0 point is exact by construction
double worst_z(const QuadCase& c, std::size_t n, double hbar = 1.0) {
  const auto times = uniform_times(c.t_max, 24);
  const auto hk = hk_correlation(c.spec, c.psi_i, c.psi_f, times, n, 7, hbar);
  const auto exact = reference::quadratic_correlation(c.spec, c.psi_i, c.psi_f, times, hbar);
  double worst = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    // at full oscillator periods every sample contributes the same value
    const double se = std::max((*hk.total.std_error)[k], 1e-6);
    worst = std::max(worst, std::abs(hk.total.values[k] - exact[k]) / se);
  }
  return worst;
}

}  // namespace

TEST(Hk, ReferenceMatchesOverlapAtZero) {
  const auto s = PotentialSpec::harmonic(0.5, 1.0);
  const GaussianPacket a{1.3, 0.4, -0.2}, b{0.7, -0.5, 0.9};
  const auto c = reference::quadratic_correlation(s, a, b, {0.0}, 0.8);
  EXPECT_LT(std::abs(c[0] - coherent_overlap(b, a, 0.8)), 1e-14);
}

TEST(Hk, ExactForQuadraticHamiltonians) {
  const QuadCase cases[] = {
      {"free", PotentialSpec::parabolic(1e-300, 1.0), {1.0, 0.0, 1.0}, {1.0, 3.0, 1.0}, 6.0},
      {"harmonic", PotentialSpec::harmonic(0.5, 1.0), {1.0, 1.0, 0.0}, {1.0, 1.0, 0.0}, 3.0 * std::numbers::pi},
      {"parabolic", PotentialSpec::parabolic(2.0, 2.0), {1.0, -3.0, 2.0}, {1.0, 3.0, 2.0}, 6.0},
  };
  for (const auto& c : cases) EXPECT_LE(worst_z(c, 10000), 3.0) << c.name;
}

TEST(Hk, InitialOverlapIsExact) {
  const auto s = PotentialSpec::eckart(2.0, 1.0);
  const GaussianPacket a{6.0, -4.0, 1.5}, b{6.0, -3.8, 1.4};
  const std::vector<double> times{0.0, 1.0};
  const auto r = hk_correlation(s, a, b, times, 64, 1, 1.0);
  EXPECT_EQ(r.total.values[0], coherent_overlap(b, a, 1.0));
}

TEST(Hk, MonodromyIsSymplectic) {
  const auto times = uniform_times(40.0, 40);
  for (const auto& s : {PotentialSpec::eckart(12.5, 1.0), PotentialSpec::eckart(12.5, 1.0).with_drive(-0.6, 0.05),
                        PotentialSpec::algebraic(2, 1.0, 1.0)}) {
    for (double p0 : {-3.0, -1.5, 2.0}) {
      const auto pts = propagate_real(s, 5.0, p0, times, 1.0, 6.0);
      for (const auto& pt : pts) EXPECT_NEAR(pt.m.det(), 1.0, 1e-6);
    }
  }
}

// Matched coherent state in a harmonic well: R(t) = exp(-i omega t/2),
// continuous through the caustics, -1 after a full period.
TEST(Hk, HarmonicPrefactorBranch) {
  const auto s = PotentialSpec::harmonic(0.5, 1.0);
  const auto times = uniform_times(4.0 * std::numbers::pi, 64);
  const auto pts = propagate_real(s, 1.0, 0.0, times, 1.0, 1.0);
  for (const auto& pt : pts) EXPECT_LT(std::abs(pt.prefactor - std::exp(cplx(0.0, -0.5 * pt.t))), 1e-6) << pt.t;
  EXPECT_LT(std::abs(pts[32].prefactor + 1.0), 1e-6);
  EXPECT_EQ(pts.front().prefactor, cplx(1.0, 0.0));
}

TEST(Hk, PrefactorBranchLoss) {
  PrefactorBranch b;
  MonodromyMatrix m;
  EXPECT_EQ(hk_prefactor(m, 1.0, 1.0, b), cplx(1.0, 0.0));
  m.qq = m.pp = -1.0;  // radicand argument jumps by pi
  EXPECT_THROW(hk_prefactor(m, 1.0, 1.0, b), BranchLoss);
}

TEST(Hk, SamplerWeightsReproduceHusimiNormalization) {
  const GaussianPacket psi{6.0, 40.0, -1.7};
  const double hbar = 1.0;
  const auto s = sample_phase_space(psi, 5000, 3, hbar);
  double sum = 0.0;
  for (const auto& x : s) sum += x.weight * std::norm(coherent_overlap(GaussianPacket{psi.gamma, x.q, x.p}, psi, hbar));
  EXPECT_NEAR(sum, 1.0, 1e-12);

  SamplerOptions opt;
  opt.filter = [](double, double p) { return p > -1.3; };
  opt.stratify = 0.3;
  const auto st = sample_phase_space(psi, 5000, 3, hbar, opt);
  ASSERT_EQ(st.size(), 5000u);
  std::size_t in = 0;
  double ssum = 0.0;
  for (std::size_t j = 0; j < st.size(); ++j) {
    in += st[j].selected;
    if (j < 1500) {
      EXPECT_TRUE(st[j].selected);
    }
    ssum += st[j].weight * std::norm(coherent_overlap(GaussianPacket{psi.gamma, st[j].q, st[j].p}, psi, hbar));
  }
  EXPECT_EQ(in, 1500u);
  EXPECT_NEAR(ssum, 1.0, 1e-12);
}

TEST(Hk, StratificationFallsBackWhenAStratumIsEmpty) {
  const GaussianPacket psi{6.0, 40.0, -1.7};
  SamplerOptions opt;
  opt.filter = [](double, double) { return false; };
  opt.stratify = 0.3;
  const auto a = sample_phase_space(psi, 100, 9, 1.0, opt);
  const auto b = sample_phase_space(psi, 100, 9, 1.0);
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a[j].q, b[j].q);
    EXPECT_EQ(a[j].weight, b[j].weight);
  }
  opt.stratify = 1.0;
  EXPECT_THROW(sample_phase_space(psi, 10, 1, 1.0, opt), InvalidArgument);
  EXPECT_THROW(sample_phase_space(psi, 0, 1, 1.0), InvalidArgument);
}

TEST(Hk, DeterministicAcrossThreads) {
  const auto s = PotentialSpec::eckart(4.0, 1.0);
  const GaussianPacket a{6.0, -8.0, 2.0}, b{6.0, 8.0, 2.0};
  const auto times = uniform_times(12.0, 12);
  PropagationOptions o1, o4;
  o1.threads = 1;
  o4.threads = 4;
  const auto r1 = hk_correlation(s, a, b, times, 700, 5, 1.0, o1);
  const auto r4 = hk_correlation(s, a, b, times, 700, 5, 1.0, o4);
  for (std::size_t k = 0; k < times.size(); ++k) {
    EXPECT_EQ(r1.total.values[k], r4.total.values[k]);
    EXPECT_EQ((*r1.total.std_error)[k], (*r4.total.std_error)[k]);
  }
  const auto r5 = hk_correlation(s, a, b, times, 700, 6, 1.0, o1);
  EXPECT_NE(r1.total.values.back(), r5.total.values.back());
}

TEST(Hk, TimeValidation) {
  const auto s = PotentialSpec::eckart(1.0, 1.0);
  const GaussianPacket a{1.0, -5.0, 1.0};
  EXPECT_THROW(hk_correlation(s, a, a, std::vector<double>{}, 10, 1, 1.0), InvalidArgument);
  EXPECT_THROW(hk_correlation(s, a, a, std::vector<double>{1.0, 1.0}, 10, 1, 1.0), InvalidArgument);
  EXPECT_THROW(hk_correlation(s, a, a, std::vector<double>{-1.0}, 10, 1, 1.0), InvalidArgument);
}
