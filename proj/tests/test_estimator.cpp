#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ouheat/errors.hpp"
#include "ouheat/estimator.hpp"

using namespace ouheat;

namespace {

const OUParams kTheta0{47.5, 22.0, 0.02};

CdfGrid small_grid() {
  CdfGrid g;
  g.u_steps = 12;
  g.x_nodes = 12;
  g.bridge.paths = 1000;
  g.bridge.steps = 200;
  return g;
}

DailyExtrema simulated(int days, std::uint64_t seed) {
  SimConfig c;
  c.horizon_days = days;
  c.seed = seed;
  return simulate_daily_extrema(kTheta0, c);
}

}  // namespace

TEST(QuantileAnchors, FromDataAndValidation) {
  DailyExtrema d;
  d.sup = {5.0, 1.0, 4.0, 2.0, 3.0};
  const auto a = QuantileAnchors::from_data(d);
  EXPECT_EQ(a.size(), 4u);
  EXPECT_DOUBLE_EQ(a.s_values[0], 1.8);
  EXPECT_DOUBLE_EQ(a.s_values[3], 4.2);
  QuantileAnchors bad = a;
  bad.levels = {0.2, 0.6, 0.4, 0.8};
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(QuantileAnchors::from_data(d, {0.3, 0.6}), ConfigError);
}

TEST(ParamBox, HandComputedBounds) {
  DailyExtrema d;
  d.sup = {25.0, 27.0, 24.0, 30.0, 26.0, 23.0, 28.0, 26.0, 25.0, 29.0};
  d.inf = std::vector<double>{15.0, 18.0, 16.0, 19.0, 17.0, 14.0, 18.0, 17.0, 16.0, 20.0};
  d.segment_starts = {0, 5};
  const ParamBox box = compute_param_box(d);

  EXPECT_DOUBLE_EQ(box.mu_min, 17.0);
  EXPECT_DOUBLE_EQ(box.mu_max, 26.3);
  // D = max(|14 - 26.3|, |30 - 17|) = 13.
  EXPECT_DOUBLE_EQ(box.l_min, 1.0 / (2.0 * 169.0));

  // Quadratic variation only inside [0,5) and [5,10).
  double qv = 0.0;
  for (std::size_t i : {1u, 2u, 3u, 4u, 6u, 7u, 8u, 9u}) {
    const double up = d.sup[i] - (*d.inf)[i - 1];
    const double down = (*d.inf)[i] - d.sup[i - 1];
    qv += std::max(up * up, down * down);
  }
  EXPECT_DOUBLE_EQ(box.beta_max, qv / 10.0);

  // Tail bound: centered suprema, probes at the 0.7/0.8/0.9/0.95 quantiles.
  std::vector<double> centered(d.sup);
  for (double& v : centered) v -= 26.3;
  double lmax = INFINITY;
  for (double q : {0.7, 0.8, 0.9, 0.95}) {
    const double x = sample_quantile(centered, q);
    if (x <= 0) continue;
    const double p = std::max(std::count_if(centered.begin(), centered.end(), [x](double v) { return v >= x; }) / 10.0, 0.05);
    lmax = std::min(lmax, -std::log(p) / (x * x));
  }
  EXPECT_DOUBLE_EQ(box.l_max, lmax);
  EXPECT_TRUE(box.contains({1.0, 20.0, 0.01}));
  EXPECT_FALSE(box.contains({1.0, 30.0, 0.01}));
}

TEST(ParamBox, Errors) {
  DailyExtrema d;
  d.sup = {25.0, 27.0, 24.0};
  EXPECT_THROW(compute_param_box(d), DataError);
  d.sup = {20.0, 20.0, 20.0};
  d.inf = std::vector<double>{20.0, 20.0, 20.0};
  EXPECT_THROW(compute_param_box(d), DataError);
  ParamBox box{10.0, 18.0, 25.0, 0.05, 0.01, {}};
  EXPECT_THROW(box.validate(), EstimationError);
}

TEST(ParamBox, ContainsTruthOnSimulatedData) {
  const auto d = simulated(1000, 3);
  const ParamBox box = compute_param_box(d);
  EXPECT_TRUE(box.contains(kTheta0));
  EXPECT_TRUE(box.warnings.empty());
}

TEST(ObjectiveQn, SumOfSquaredAnchorGaps) {
  const auto d = simulated(300, 5);
  const auto anchors = QuantileAnchors::from_data(d);
  const CdfGrid g = small_grid();
  double expected = 0.0;
  for (double s : anchors.s_values) {
    const double gap = stationary_sup_cdf(s, kTheta0, 1.0, g).p - empirical_sup_cdf(d, s);
    expected += gap * gap;
  }
  EXPECT_DOUBLE_EQ(objective_qn(kTheta0, anchors, d, g), expected);
}

TEST(Estimate2d, RecoversMeanAndScaleWithBetaKnown) {
  const auto d = simulated(5000, 8);
  const auto e = estimate_2d(d, 47.5, std::nullopt, small_grid());
  EXPECT_EQ(e.theta_hat.beta, 47.5);
  EXPECT_NEAR(e.theta_hat.mu, 22.0, 0.5);
  EXPECT_NEAR(e.theta_hat.l, 0.02, 0.002);
  EXPECT_TRUE(e.box.contains(e.theta_hat));
  EXPECT_EQ(e.per_anchor_residuals.size(), 4u);
}

TEST(Estimate, BestStartWinsAndStaysInBox) {
  const auto d = simulated(1000, 2);
  OptConfig opt;
  opt.nelder_mead.max_iterations = 80;
  const auto e = estimate(d, std::nullopt, small_grid(), opt);
  EXPECT_TRUE(e.box.contains(e.theta_hat));
  EXPECT_EQ(e.restarts_used, 4);
  ASSERT_EQ(e.start_objectives.size(), 4u);
  for (double q : e.start_objectives) EXPECT_LE(e.objective, q + 1e-15);
  double sum = 0.0;
  for (double r : e.per_anchor_residuals) sum += r * r;
  EXPECT_DOUBLE_EQ(sum, e.objective);
}

TEST(Estimate, Deterministic) {
  const auto d = simulated(400, 6);
  OptConfig opt;
  opt.nelder_mead.max_iterations = 40;
  opt.starts = 1;
  const auto a = estimate(d, std::nullopt, small_grid(), opt);
  const auto b = estimate(d, std::nullopt, small_grid(), opt);
  EXPECT_EQ(a.theta_hat.beta, b.theta_hat.beta);
  EXPECT_EQ(a.theta_hat.mu, b.theta_hat.mu);
  EXPECT_EQ(a.theta_hat.l, b.theta_hat.l);
}

TEST(MixingDecay, CorrelationsWithinGapBound) {
  std::vector<int> lags{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto r = mixing_decay_check(kTheta0, lags, 100000, 3);
  ASSERT_EQ(r.lags.size(), lags.size());
  for (const auto& m : r.lags) {
    EXPECT_TRUE(m.within_bound) << "lag " << m.lag << " corr " << m.corr_identity;
    EXPECT_EQ(m.gap_days, m.lag - 1);
  }
  EXPECT_TRUE(r.all_within);
  // Adjacent daily windows touch, so their suprema share a boundary point;
  // reading the bound with the index lag is too tight at lag 1.
  EXPECT_GT(r.lags[0].corr_identity, r.lags[0].lag_bound + r.lags[0].slack);
}

TEST(Injectivity, DistinctParametersSeparate) {
  const auto d = simulated(1000, 1);
  const auto anchors = QuantileAnchors::from_data(d);
  const std::vector<OUParams> thetas{kTheta0, {30.0, 22.0, 0.02}, {47.5, 23.0, 0.02}, {47.5, 22.0, 0.025}};
  const auto r = injectivity_probe(thetas, anchors, small_grid());
  EXPECT_TRUE(r.separated);
  EXPECT_GT(r.min_separation, r.max_noise);
}

TEST(ReplicationStudy, IndependentOfWorkerCount) {
  StudyConfig c;
  c.replications = 2;
  c.sample_sizes = {300, 100};
  c.fixed_beta = 47.5;
  OptConfig opt;
  opt.nelder_mead.max_iterations = 30;
  opt.starts = 1;
  c.workers = 1;
  const auto a = replication_study(c, small_grid(), opt);
  c.workers = 2;
  const auto b = replication_study(c, small_grid(), opt);
  ASSERT_EQ(a.fits.size(), 4u);
  for (std::size_t i = 0; i < a.fits.size(); ++i) {
    EXPECT_EQ(a.fits[i].theta.mu, b.fits[i].theta.mu);
    EXPECT_EQ(a.fits[i].theta.l, b.fits[i].theta.l);
  }
  EXPECT_EQ(a.summaries.size(), 2u);
  EXPECT_EQ(a.summaries[0].n_days, 300);
}
