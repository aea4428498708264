#include <gtest/gtest.h>

#include <cmath>

#include "ouheat/errors.hpp"
#include "ouheat/sup_cdf.hpp"
#include "pde_oracle.hpp"

using namespace ouheat;

namespace {

const OUParams kTheta0{47.5, 22.0, 0.02};
const OUParams kParis{34.35, 19.04, 0.02633};

CdfGrid fast_grid() {
  CdfGrid g;
  g.bridge.paths = 4000;
  return g;
}

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// At a = mu the hitting problem is that of Brownian motion reaching its
// start's mirror: U_s = e^{-ls}(u0 + W_tau(s)), tau(T) = (e^{2lT} - 1)/(2l),
// so P(max U < 0 | u0 < 0) = 2 Phi(|u0| / sqrt(tau)) - 1.
double tau_of(const OUParams& p, double t) {
  return (std::exp(2.0 * p.l * p.beta * t) - 1.0) / (2.0 * p.l);
}

double closed_form_conditional_at_mean(const OUParams& p, double t, double x) {
  if (x >= p.mu) return 0.0;
  return 2.0 * phi((p.mu - x) / std::sqrt(tau_of(p, t))) - 1.0;
}

double closed_form_stationary_at_mean(const OUParams& p, double t) {
  // Simpson over u0 in [-12 sd, 0].
  const double sd = p.stationary_sd();
  const int n = 20000;
  const double h = 12.0 * sd / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = -12.0 * sd + i * h;
    const double dens = std::exp(-0.5 * (u / sd) * (u / sd)) / (sd * std::sqrt(2.0 * M_PI));
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * dens * closed_form_conditional_at_mean(p, t, p.mu + u);
  }
  return sum * h / 3.0;
}

}  // namespace

TEST(CdfGrid, Validation) {
  CdfGrid g;
  g.u_steps = 4;
  EXPECT_THROW(g.validate(), ConfigError);
  g = {};
  g.x_nodes = 2;
  EXPECT_THROW(g.validate(), ConfigError);
  g = {};
  g.x_lower_sigmas = 1.0;
  EXPECT_THROW(g.validate(), ConfigError);
  EXPECT_NO_THROW(CdfGrid{}.validate());
}

TEST(StationarySupCdf, ClosedFormAtTheMean) {
  const CdfGrid g;
  const double exact = closed_form_stationary_at_mean(kTheta0, 1.0);
  EXPECT_NEAR(exact, 0.1263992651945556, 1e-9);
  const auto v = stationary_sup_cdf(22.0, kTheta0, 1.0, g);
  EXPECT_NEAR(v.p, exact, 1e-3);
  EXPECT_LT(v.mc_error, 1e-3);
}

TEST(ConditionalSupCdf, ClosedFormAtTheMean) {
  const CdfGrid g;
  for (double x : {10.0, 17.0, 20.0, 21.5}) {
    const double exact = closed_form_conditional_at_mean(kTheta0, 1.0, x);
    EXPECT_NEAR(conditional_sup_cdf(22.0, kTheta0, 1.0, x, g).p, exact, 1.5e-3) << "x=" << x;
  }
  EXPECT_NEAR(closed_form_conditional_at_mean(kTheta0, 1.0, 17.0), 0.32505654, 1e-7);
}

TEST(StationarySupCdf, AgreesWithBackwardEquation) {
  const CdfGrid g;
  for (double a : {15.5, 20.0, 26.0, 29.5, 33.0}) {
    const double ref = oracle::stationary_sup_cdf(a, kTheta0.beta, kTheta0.mu, kTheta0.l, 1.0);
    EXPECT_NEAR(stationary_sup_cdf(a, kTheta0, 1.0, g).p, ref, 1e-3) << "a=" << a;
  }
  for (double a : {18.0, 24.0, 31.0}) {
    const double ref = oracle::stationary_sup_cdf(a, kParis.beta, kParis.mu, kParis.l, 1.0);
    EXPECT_NEAR(stationary_sup_cdf(a, kParis, 1.0, g).p, ref, 1e-3) << "a=" << a;
  }
}

TEST(ConditionalSupCdf, AgreesWithBackwardEquation) {
  const CdfGrid g;
  for (double x : {14.0, 19.0, 25.0}) {
    const double a = 27.0;
    const double ref = oracle::conditional_sup_cdf(a, kTheta0.beta, kTheta0.mu, kTheta0.l, 1.0, x);
    EXPECT_NEAR(conditional_sup_cdf(a, kTheta0, 1.0, x, g).p, ref, 1.5e-3) << "x=" << x;
  }
}

TEST(ConditionalSupCdf, ZeroAtOrBelowStart) {
  const CdfGrid g = fast_grid();
  EXPECT_EQ(conditional_sup_cdf(20.0, kTheta0, 1.0, 20.0, g).p, 0.0);
  EXPECT_EQ(conditional_sup_cdf(19.0, kTheta0, 1.0, 20.0, g).p, 0.0);
}

TEST(ConditionalInfCdf, OneAtOrAboveLevelAndBackwardEquation) {
  const CdfGrid g;
  EXPECT_EQ(conditional_inf_cdf(20.0, kTheta0, 1.0, 20.0, g).p, 1.0);
  EXPECT_EQ(conditional_inf_cdf(21.0, kTheta0, 1.0, 20.0, g).p, 1.0);
  // Mirror through mu: P(I <= a | x) = 1 - P(S < 2mu - a | 2mu - x).
  const double a = 17.0, x = 24.0;
  const double ref = 1.0 - oracle::conditional_sup_cdf(2 * 22.0 - a, kTheta0.beta, kTheta0.mu, kTheta0.l, 1.0, 2 * 22.0 - x);
  EXPECT_NEAR(conditional_inf_cdf(a, kTheta0, 1.0, x, g).p, ref, 1.5e-3);
}

TEST(SupInfReflection, IdentityWithinTolerance) {
  const CdfGrid g = fast_grid();
  for (double x : {16.0, 22.0, 27.0}) {
    for (double a : {x - 3.0, x - 0.5}) {
      const double inf_side = conditional_inf_cdf(a, kTheta0, 1.0, x, g).p;
      const double sup_side = 1.0 - conditional_sup_cdf(2 * kTheta0.mu - a, kTheta0, 1.0, 2 * kTheta0.mu - x, g).p;
      EXPECT_NEAR(inf_side, sup_side, 0.01);
    }
  }
}

TEST(StationarySupCdf, RangeAndMonotoneInLevel) {
  const CdfGrid g = fast_grid();
  double prev = -1.0;
  for (double a = 0.0; a <= 45.0; a += 1.5) {
    const auto v = stationary_sup_cdf(a, kTheta0, 1.0, g);
    EXPECT_GE(v.p, 0.0);
    EXPECT_LE(v.p, 1.0);
    EXPECT_GE(v.p, prev - 1e-12) << "a=" << a;
    prev = v.p;
  }
  EXPECT_LT(stationary_sup_cdf(0.0, kTheta0, 1.0, g).p, 1e-4);
  EXPECT_GT(stationary_sup_cdf(45.0, kTheta0, 1.0, g).p, 1.0 - 1e-4);
}

TEST(StationarySupCdf, NonincreasingInBetaOnCommonNoise) {
  const CdfGrid g = fast_grid();
  for (double a : {20.0, 25.0, 30.0}) {
    double prev = 2.0;
    for (double beta : {1.0, 5.0, 20.0, 47.5, 100.0, 200.0}) {
      const double p = stationary_sup_cdf(a, {beta, 22.0, 0.02}, 1.0, g).p;
      EXPECT_LE(p, prev + 1e-12) << "a=" << a << " beta=" << beta;
      prev = p;
    }
  }
}

TEST(StationarySupCdf, ShortHorizonLimitIsStationaryNormal) {
  const CdfGrid g = fast_grid();
  for (double a : {15.0, 22.0, 28.0}) {
    const double limit = phi((a - 22.0) * std::sqrt(2.0 * 0.02));
    EXPECT_NEAR(stationary_sup_cdf(a, kTheta0, 1e-6, g).p, limit, 0.01);
  }
}

TEST(StationarySupCdf, DeterministicAcrossWorkers) {
  CdfGrid g = fast_grid();
  const auto a = stationary_sup_cdf(26.0, kTheta0, 1.0, g);
  g.workers = 3;
  const auto b = stationary_sup_cdf(26.0, kTheta0, 1.0, g);
  EXPECT_EQ(a.p, b.p);
  EXPECT_EQ(a.mc_error, b.mc_error);
}

TEST(StationarySupCdf, UncachedEvaluationAgrees) {
  CdfGrid g;
  g.u_steps = 12;
  g.x_nodes = 12;
  g.bridge.paths = 1500;
  g.bridge.steps = 300;
  const auto cached = stationary_sup_cdf(26.0, kTheta0, 1.0, g);
  g.cache_enabled = false;
  const auto direct = stationary_sup_cdf(26.0, kTheta0, 1.0, g);
  EXPECT_NEAR(cached.p, direct.p, 4.0 * std::hypot(cached.mc_error, direct.mc_error) + 2e-3);
}

TEST(StationarySupCdf, RejectsNoisyEvaluations) {
  CdfGrid g = fast_grid();
  g.max_mc_error = 1e-12;
  EXPECT_THROW(stationary_sup_cdf(26.0, kTheta0, 1.0, g), CdfError);
}

TEST(SupCdfInverse, RoundTrip) {
  const CdfGrid g = fast_grid();
  for (double p : {0.05, 0.5, 0.95}) {
    const double a = sup_cdf_inverse(p, kTheta0, 1.0, g);
    EXPECT_NEAR(stationary_sup_cdf(a, kTheta0, 1.0, g).p, p, 1e-3);
  }
  EXPECT_THROW(sup_cdf_inverse(1.0, kTheta0, 1.0, g), ConfigError);
}
