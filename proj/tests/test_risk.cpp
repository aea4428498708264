#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ouheat/errors.hpp"
#include "ouheat/random.hpp"
#include "ouheat/risk.hpp"

using namespace ouheat;

namespace {

const OUParams kParis{34.35, 19.04, 0.02633};
const OUParams kTheta0{47.5, 22.0, 0.02};

HeatwaveSpec two(double a_max, double a_min, int delta = 3, int n = 61) {
  return {TwoThreshold{a_max, a_min}, delta, n};
}

bool window_ok(const std::vector<double>& sup, const std::vector<double>& inf, const HeatwaveSpec& spec, int i, int len) {
  const double ms = *std::min_element(sup.begin() + i, sup.begin() + i + len);
  const double mi = *std::min_element(inf.begin() + i, inf.begin() + i + len);
  if (const auto* t = std::get_if<TwoThreshold>(&spec.definition)) return ms >= t->a_max && mi >= t->a_min;
  return mi >= std::get<SingleThreshold>(spec.definition).a;
}

// All-windows scan written straight from the definition.
std::optional<Heatwave> brute_force(const std::vector<double>& sup, const std::vector<double>& inf,
                                    const HeatwaveSpec& spec) {
  const int n = static_cast<int>(sup.size());
  for (int i = 0; i + spec.delta <= n; ++i) {
    if (!window_ok(sup, inf, spec, i, spec.delta)) continue;
    int best = spec.delta;
    for (int len = spec.delta; i + len <= n; ++len)
      if (window_ok(sup, inf, spec, i, len)) best = len;
    return Heatwave{i, i + best};
  }
  return std::nullopt;
}

}  // namespace

TEST(HeatwaveSpec, Validation) {
  EXPECT_THROW(two(20.0, 25.0).validate(), ConfigError);
  EXPECT_THROW((HeatwaveSpec{SingleThreshold{20.0}, 0, 61}.validate()), ConfigError);
  EXPECT_THROW((HeatwaveSpec{SingleThreshold{20.0}, 5, 4}.validate()), ConfigError);
  EXPECT_NO_THROW(two(31.0, 21.0).validate());
}

TEST(DetectHeatwave, WholeSeason) {
  const std::vector<double> sup(61, 36.0), inf(61, 26.0);
  const auto hw = detect_heatwave(sup, inf, two(31.0, 21.0));
  ASSERT_TRUE(hw);
  EXPECT_EQ(hw->tau_in, 0);
  EXPECT_EQ(hw->tau_out, 61);
}

TEST(DetectHeatwave, NoneBelowThresholds) {
  const std::vector<double> sup(61, 25.0), inf(61, 15.0);
  EXPECT_FALSE(detect_heatwave(sup, inf, two(31.0, 21.0)));
}

TEST(DetectHeatwave, ExactlyOneWindow) {
  std::vector<double> sup(61, 25.0), inf(61, 15.0);
  for (int i = 0; i < 3; ++i) {
    sup[i] = 32.0;
    inf[i] = 22.0;
  }
  const auto hw = detect_heatwave(sup, inf, two(31.0, 21.0));
  ASSERT_TRUE(hw);
  EXPECT_EQ(hw->tau_in, 0);
  EXPECT_EQ(hw->tau_out, 3);
}

TEST(DetectHeatwave, MismatchedLengths) {
  const std::vector<double> sup(5, 1.0), inf(4, 1.0);
  EXPECT_THROW(detect_heatwave(sup, inf, two(31.0, 21.0)), DataError);
}

TEST(DetectHeatwave, MatchesBruteForceScan) {
  Xoshiro256 rng = make_stream(2024, 0);
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 5 + static_cast<int>(rng.uniform() * 40);
    const int delta = 1 + static_cast<int>(rng.uniform() * 5);
    if (delta > n) continue;
    std::vector<double> sup(n), inf(n);
    for (int i = 0; i < n; ++i) {
      inf[i] = 15.0 + 10.0 * rng.uniform();
      sup[i] = inf[i] + 12.0 * rng.uniform();
    }
    const HeatwaveSpec spec = rep % 2 ? two(28.0, 19.0, delta, n) : HeatwaveSpec{SingleThreshold{18.0}, delta, n};
    EXPECT_EQ(detect_heatwave(sup, inf, spec), brute_force(sup, inf, spec)) << "case " << rep;
  }
}

TEST(SimulateSeasons, ThresholdsFarBelowGiveCertainty) {
  const auto r = simulate_seasons(kParis, two(19.04 - 10 * 4.36, 19.04 - 12 * 4.36), 200, 1, {1e-2, 1});
  EXPECT_EQ(r.probability.value, 1.0);
  ASSERT_TRUE(r.mean_duration);
  EXPECT_EQ(r.mean_duration->value, 61.0);
  EXPECT_EQ(r.mean_duration->std_error, 0.0);
}

TEST(SimulateSeasons, NoEventGivesUndefinedDuration) {
  const auto r = simulate_seasons(kParis, two(80.0, 70.0), 50, 1, {1e-2, 1});
  EXPECT_EQ(r.probability.value, 0.0);
  EXPECT_FALSE(r.mean_duration);
}

TEST(SimulateSeasons, DurationsAtLeastDeltaAndStdErrorFormula) {
  const auto r = simulate_seasons(kParis, two(28.0, 19.0), 2000, 5, {1e-2, 1});
  ASSERT_GT(r.n_events, 0);
  EXPECT_GE(r.min_duration, 3);
  EXPECT_GE(r.mean_duration->value, 3.0);
  const double p = r.probability.value;
  EXPECT_DOUBLE_EQ(r.probability.std_error, std::sqrt(p * (1 - p) / 2000));
}

TEST(SimulateSeasons, TwoThresholdsNeverMoreLikelyThanOne) {
  const RiskOptions opt{1e-2, 1};
  const auto both = simulate_seasons(kParis, two(29.0, 20.0), 3000, 9, opt);
  const auto one = simulate_seasons(kParis, HeatwaveSpec{SingleThreshold{20.0}, 3, 61}, 3000, 9, opt);
  EXPECT_LE(both.n_events, one.n_events);
}

TEST(SimulateSeasons, RaisingThresholdsNeverIncreasesProbability) {
  const RiskOptions opt{1e-2, 1};
  std::int64_t prev = 3001;
  for (double shift : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    const auto r = simulate_seasons(kParis, two(29.0 + shift, 20.0 + shift), 3000, 9, opt);
    EXPECT_LE(r.n_events, prev);
    prev = r.n_events;
  }
}

TEST(SimulateSeasons, SeedAndWorkerDeterminism) {
  const auto a = simulate_seasons(kParis, two(28.0, 19.0), 5000, 3, {1e-2, 1});
  const auto b = simulate_seasons(kParis, two(28.0, 19.0), 5000, 3, {1e-2, 3});
  EXPECT_EQ(a.n_events, b.n_events);
  EXPECT_EQ(a.mean_duration->value, b.mean_duration->value);
  const auto c = simulate_seasons(kParis, two(28.0, 19.0), 5000, 4, {1e-2, 1});
  EXPECT_NE(a.mean_duration->value, c.mean_duration->value);
}

TEST(SimulateSeasons, IndependentRunsAgree) {
  const auto a = simulate_seasons(kParis, two(28.0, 19.0), 4000, 11, {1e-2, 1});
  const auto b = simulate_seasons(kParis, two(28.0, 19.0), 8000, 12, {1e-2, 1});
  EXPECT_LT(std::abs(a.probability.value - b.probability.value),
            3.0 * std::hypot(a.probability.std_error, b.probability.std_error));
}

TEST(SeverityArea, NonnegativeAndUndefinedWhenUnreachable) {
  const auto r = severity_area(kTheta0, 26.67, 3, 200000, 1, {1e-2, 1});
  ASSERT_TRUE(r.area);
  EXPECT_GT(r.n_events, 0);
  EXPECT_GE(r.area->value, 0.0);
  const auto none = severity_area(kTheta0, 80.0, 3, 1000, 1, {1e-2, 1});
  EXPECT_FALSE(none.area);
  EXPECT_EQ(none.n_events, 0);
}

TEST(SeverityArea, GrowsAsThresholdDrops) {
  double prev = -1.0;
  for (double a : {28.0, 26.67, 25.0, 23.0}) {
    const auto r = severity_area(kTheta0, a, 3, 200000, 21, {1e-2, 1});
    ASSERT_TRUE(r.area);
    EXPECT_GT(r.area->value, prev) << "a=" << a;
    prev = r.area->value;
  }
}

TEST(SeverityArea, WorkerDeterminism) {
  const auto a = severity_area(kTheta0, 25.0, 3, 30000, 2, {1e-2, 1});
  const auto b = severity_area(kTheta0, 25.0, 3, 30000, 2, {1e-2, 2});
  EXPECT_EQ(a.n_events, b.n_events);
  EXPECT_EQ(a.area->value, b.area->value);
}

TEST(PredictionIntervals, CollapseWithoutNoise) {
  const auto bands = prediction_intervals({1e-12, 22.0, 0.02}, 22.0, 5, 200, 0.95, 1);
  ASSERT_EQ(bands.size(), 5u);
  for (const auto& b : bands) {
    EXPECT_NEAR(b.lower, 22.0, 1e-4);
    EXPECT_NEAR(b.upper, 22.0, 1e-4);
  }
}

TEST(PredictionIntervals, WidthGrowsToStationaryLevel) {
  const auto bands = prediction_intervals(kParis, kParis.mu, 10, 4000, 0.95, 4, {1e-3, 1});
  std::vector<double> width;
  for (const auto& b : bands) width.push_back(b.upper - b.lower);
  EXPECT_LT(width[0], width[1]);
  EXPECT_LT(width[1], width[2]);
  for (std::size_t k = 3; k < width.size(); ++k) EXPECT_GT(width[k], width[2] - 0.5);
  for (const auto& b : bands) {
    EXPECT_LT(b.lower, b.median);
    EXPECT_LT(b.median, b.upper);
  }
  EXPECT_THROW(prediction_intervals(kParis, 20.0, 0, 10, 0.95, 1), ConfigError);
  EXPECT_THROW(prediction_intervals(kParis, 20.0, 3, 10, 1.5, 1), ConfigError);
}
