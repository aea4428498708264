#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ouheat/bessel_bridge.hpp"
#include "ouheat/errors.hpp"

using namespace ouheat;

namespace {

// Oracle: the 3-d Bessel bridge from 0 to c over [0, u] is the modulus of a
// 3-d Brownian bridge from the origin to (c, 0, 0), which can be sampled
// exactly on a grid. Returns mean and std error of the functional.
std::pair<double, double> brownian_bridge_oracle(double l, double b, double u, double c, int steps, int paths,
                                                 std::uint64_t seed) {
  NormalSource normal(make_stream(seed, 12345));
  const double h = u / steps;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int m = 0; m < paths; ++m) {
    double w[3] = {0.0, 0.0, 0.0};  // driftless bridge part, pinned at 0 on both ends
    double prev = b * b;            // (r_0 - b)^2 with r_0 = 0
    double integral = 0.0;
    for (int k = 0; k < steps; ++k) {
      const double rest = u - k * h;
      const double next_rest = rest - h;
      double r = 0.0;
      if (k + 1 < steps) {
        for (double& wi : w) wi = wi * next_rest / rest + std::sqrt(h * next_rest / rest) * normal();
        const double s = (k + 1) * h;
        const double x = w[0] + c * s / u;
        r = std::sqrt(x * x + w[1] * w[1] + w[2] * w[2]);
      } else {
        r = c;
      }
      const double cur = (r - b) * (r - b);
      integral += 0.5 * h * (prev + cur);
      prev = cur;
    }
    const double f = std::exp(-0.5 * l * l * integral);
    sum += f;
    sum_sq += f * f;
  }
  const double mean = sum / paths;
  return {mean, std::sqrt((sum_sq / paths - mean * mean) / (paths - 1))};
}

}  // namespace

TEST(BridgeSpec, Validation) {
  BridgeSpec s;
  s.u = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.endpoint = -1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.steps = 1;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_EQ(default_bridge_steps(0.5), 200);
  EXPECT_EQ(default_bridge_steps(10.0), 2000);
}

TEST(SimulateReversedBridge, EndpointsAndPositivity) {
  for (const auto scheme : {BridgeScheme::DriftImplicit, BridgeScheme::ExplicitClamped}) {
    BridgeSpec s{5.0, 2.0, 400, 1, scheme};
    Xoshiro256 rng = make_stream(3, 0);
    for (int rep = 0; rep < 50; ++rep) {
      const auto p = simulate_reversed_bridge(s, rng);
      ASSERT_EQ(p.reversed.size(), 401u);
      EXPECT_EQ(p.reversed.front(), 2.0);
      EXPECT_EQ(p.reversed.back(), 0.0);
      for (double r : p.reversed) EXPECT_GE(r, 0.0);
      const auto f = p.forward();
      EXPECT_EQ(f.front(), 0.0);
      EXPECT_EQ(f.back(), 2.0);
    }
  }
}

TEST(BridgeExpectation, ZeroRateIsOne) {
  BridgeSpec s{3.0, 1.0, 200, 500};
  const auto e = bridge_exponential_expectation(0.0, 2.0, s, 1);
  EXPECT_DOUBLE_EQ(e.value, 1.0);
  EXPECT_DOUBLE_EQ(e.std_error, 0.0);
}

TEST(BridgeExpectation, MatchesBrownianBridgeOracle) {
  const double l = 0.1, b = 3.0, u = 20.0, c = 4.0;
  const int steps = 2000;
  BridgeSpec s{u, c, steps, 20000};
  const auto e = bridge_exponential_expectation(l, b, s, 5);
  const auto [ref, ref_se] = brownian_bridge_oracle(l, b, u, c, steps, 20000, 6);
  EXPECT_GT(ref, 0.1);
  EXPECT_LT(ref, 0.9);
  EXPECT_NEAR(e.value, ref, 4.0 * std::hypot(e.std_error, ref_se) + 2e-3);
}

TEST(BridgeExpectation, WorkerCountDoesNotChangeResult) {
  BridgeSpec s{4.0, 1.5, 300, 3000};
  const auto a = bridge_exponential_expectation(0.3, 1.0, s, 11, 1);
  const auto b = bridge_exponential_expectation(0.3, 1.0, s, 11, 3);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(BridgeMomentTable, ScalingIdentityAgainstRealTimeBridges) {
  BridgeMomentTable::Settings set;
  set.paths = 20000;
  set.steps = 500;
  const BridgeMomentTable table(set);
  const double g = 0.9;  // a table node
  for (const double u : {2.0, 30.0}) {
    const double c = g * std::sqrt(u);
    const double l = 0.08, b = 2.5;
    const auto from_table = table.expectation(g, u, l, b);
    BridgeSpec s{u, c, set.steps, 20000};
    const auto direct = bridge_exponential_expectation(l, b, s, 77);
    EXPECT_NEAR(from_table.value, direct.value, 4.0 * std::hypot(from_table.std_error, direct.std_error)) << "u=" << u;
  }
}

TEST(BridgeMomentTable, DeterministicAndCached) {
  BridgeMomentTable::Settings set;
  set.paths = 500;
  set.steps = 100;
  const BridgeMomentTable a(set, 1);
  const BridgeMomentTable b(set, 2);
  ASSERT_EQ(a.gamma_count(), b.gamma_count());
  for (std::size_t k = 0; k < a.gamma_count(); k += 17) {
    const auto x = a.first_moments(k);
    const auto y = b.first_moments(k);
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
  }
  const auto c1 = cached_bridge_table(set);
  const auto c2 = cached_bridge_table(set);
  EXPECT_EQ(c1.get(), c2.get());
  set.seed += 1;
  EXPECT_NE(cached_bridge_table(set).get(), c1.get());
}

TEST(BridgeKernel, BatchMatchesScalarReference) {
  const int steps = 300;
  std::vector<double> normals(steps - 1);
  NormalSource n(make_stream(8, 8));
  for (double& z : normals) z = n();
  const std::vector<double> starts{0.0, 0.05, 0.7, 2.0, 8.5};
  for (const auto scheme : {BridgeScheme::DriftImplicit, BridgeScheme::ExplicitClamped}) {
    std::vector<double> a1(starts.size()), a2(starts.size());
    kernel::normalized_moments_batch(starts, normals, scheme, a1, a2);
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const auto ref = normalized_bridge_moments(starts[k], normals, scheme);
      EXPECT_NEAR(a1[k], ref.a1, 1e-12 * (1.0 + std::abs(ref.a1)));
      EXPECT_NEAR(a2[k], ref.a2, 1e-12 * (1.0 + std::abs(ref.a2)));
    }
  }
}

TEST(BridgeKernel, ExpQuadraticSums) {
  const std::vector<double> a1{0.5, 1.0}, a2{0.3, 2.0};
  const auto s = kernel::exp_quadratic(a1, a2, 2.0, 1.0, 0.1);
  const double f0 = std::exp(-(0.6 - 0.5 + 0.1));
  const double f1 = std::exp(-(4.0 - 1.0 + 0.1));
  EXPECT_NEAR(s.sum, f0 + f1, 1e-13);
  EXPECT_NEAR(s.sum_sq, f0 * f0 + f1 * f1, 1e-13);
  const auto blend = kernel::exp_quadratic_blend(a1, a2, a1, a2, 0.3, 2.0, 1.0, 0.1);
  EXPECT_NEAR(blend.sum, s.sum, 1e-13);
}
