#include "ouheat/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ouheat/errors.hpp"
#include "ouheat/parallel.hpp"

namespace ouheat {

QuantileAnchors QuantileAnchors::from_data(const DailyExtrema& data, std::vector<double> levels) {
  if (data.sup.empty()) throw DataError("anchors from an empty sample");
  QuantileAnchors anchors;
  anchors.levels = std::move(levels);
  anchors.s_values.reserve(anchors.levels.size());
  for (double p : anchors.levels) anchors.s_values.push_back(sample_quantile(data.sup, p));
  anchors.validate();
  return anchors;
}

void QuantileAnchors::validate() const {
  if (levels.size() < 3) throw ConfigError("at least 3 quantile anchors are needed for 3 parameters");
  if (s_values.size() != levels.size()) throw ConfigError("anchor levels and values differ in length");
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (!(levels[j] > 0.0 && levels[j] < 1.0)) throw ConfigError("anchor levels must lie in (0, 1)");
    if (j > 0 && !(levels[j] > levels[j - 1])) throw ConfigError("anchor levels must be strictly increasing");
    if (j > 0 && s_values[j] < s_values[j - 1]) throw ConfigError("anchor values must be nondecreasing");
  }
}

bool ParamBox::contains(const OUParams& t) const {
  return t.beta > 0.0 && t.beta <= beta_max && t.mu >= mu_min && t.mu <= mu_max && t.l >= l_min && t.l <= l_max;
}

void ParamBox::validate() const {
  if (!(beta_max > 0.0)) throw EstimationError("parameter box: beta_max must be positive");
  if (!(mu_min <= mu_max)) throw EstimationError("parameter box: mu_min exceeds mu_max");
  if (!(l_min > 0.0)) throw EstimationError("parameter box: l_min must be positive");
  if (!(l_min <= l_max)) {
    std::ostringstream msg;
    msg << "parameter box: tail-bound l_max = " << l_max << " is below variance bound l_min = " << l_min;
    throw EstimationError(msg.str());
  }
}

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

ParamBox compute_param_box(const DailyExtrema& data) {
  data.validate();
  if (!data.has_inf()) throw DataError("parameter bounds need daily infima as well as suprema");
  const std::size_t n = data.size();
  if (n < 2) throw DataError("parameter bounds need at least 2 days");
  const auto& sup = data.sup;
  const auto& inf = *data.inf;

  ParamBox box;
  const double m_max = mean(sup);
  const double m_min = mean(inf);
  const double rec_max = *std::max_element(sup.begin(), sup.end());
  const double rec_min = *std::min_element(inf.begin(), inf.end());
  box.mu_min = m_min;
  box.mu_max = m_max;

  const double spread = std::max(std::abs(rec_min - m_max), std::abs(rec_max - m_min));
  if (!(spread > 0.0)) throw DataError("degenerate data: all temperatures are equal");
  box.l_min = 1.0 / (2.0 * spread * spread);

  std::vector<double> centered(sup);
  for (auto& v : centered) v -= m_max;
  const double p_floor = 1.0 / (2.0 * static_cast<double>(n));
  double l_max = std::numeric_limits<double>::infinity();
  for (double q : {0.7, 0.8, 0.9, 0.95}) {
    const double x = sample_quantile(centered, q);
    if (!(x > 0.0)) continue;
    const auto hits = std::count_if(centered.begin(), centered.end(), [x](double v) { return v >= x; });
    const double p = std::max(static_cast<double>(hits) / static_cast<double>(n), p_floor);
    l_max = std::min(l_max, -std::log(p) / (x * x));
  }
  if (!std::isfinite(l_max)) throw DataError("degenerate data: no positive exceedance probe for the l upper bound");
  box.l_max = l_max;

  std::vector<std::size_t> starts = data.segment_starts;
  starts.push_back(n);
  double qv = 0.0;
  for (std::size_t s = 0; s + 1 < starts.size(); ++s) {
    for (std::size_t i = starts[s] + 1; i < starts[s + 1]; ++i) {
      const double up = sup[i] - inf[i - 1];
      const double down = inf[i] - sup[i - 1];
      qv += std::max(up * up, down * down);
    }
  }
  box.beta_max = qv / (static_cast<double>(n) * data.h);
  if (!(box.beta_max > 0.0)) throw DataError("degenerate data: no consecutive days for the beta upper bound");

  if (box.l_max < box.l_min) {
    std::ostringstream msg;
    msg << "tail-bound l_max = " << box.l_max << " below variance bound l_min = " << box.l_min;
    box.warnings.push_back(msg.str());
  }
  return box;
}

namespace {

struct PreparedObjective {
  std::vector<double> s_values;
  std::vector<double> empirical;
  double h = 1.0;
  const CdfGrid* grid = nullptr;

  PreparedObjective(const QuantileAnchors& anchors, const DailyExtrema& data, const CdfGrid& g)
      : s_values(anchors.s_values), h(data.h), grid(&g) {
    empirical.reserve(s_values.size());
    for (double s : s_values) empirical.push_back(empirical_sup_cdf(data, s));
  }

  std::vector<double> residuals(const OUParams& theta) const {
    std::vector<double> r(s_values.size());
    for (std::size_t j = 0; j < s_values.size(); ++j)
      r[j] = stationary_sup_cdf(s_values[j], theta, h, *grid).p - empirical[j];
    return r;
  }

  double operator()(const OUParams& theta) const {
    double q = 0.0;
    for (double r : residuals(theta)) q += r * r;
    return q;
  }
};

double logistic(double y) { return 1.0 / (1.0 + std::exp(-y)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

struct Interval {
  double lo;
  double hi;
  double map(double y) const { return lo + (hi - lo) * logistic(y); }
  double unmap_fraction(double f) const { return logit(f); }
};

/// Start fractions inside the box, per coordinate.
std::vector<std::vector<double>> start_fractions(std::size_t dims, int count) {
  static const std::array<std::array<double, 3>, 4> kStarts{{
      {0.5, 0.5, 0.5},
      {0.25, 0.25, 0.25},
      {0.75, 0.75, 0.75},
      {0.25, 0.75, 0.75},
  }};
  std::vector<std::vector<double>> out;
  for (int s = 0; s < std::min<int>(count, static_cast<int>(kStarts.size())); ++s)
    out.emplace_back(kStarts[s].begin(), kStarts[s].begin() + static_cast<std::ptrdiff_t>(dims));
  return out;
}

EstimationResult run_estimation(const DailyExtrema& data, std::optional<double> beta_fixed,
                                 std::optional<QuantileAnchors> anchors_in, const CdfGrid& grid,
                                 const OptConfig& opt) {
  data.validate();
  grid.validate();
  if (opt.starts < 1) throw ConfigError("optimizer needs at least one start");
  EstimationResult result;
  result.box = compute_param_box(data);
  result.box.validate();
  result.anchors = anchors_in ? *anchors_in : QuantileAnchors::from_data(data);
  result.anchors.validate();
  result.fixed_beta = beta_fixed;
  const PreparedObjective qn(result.anchors, data, grid);

  // beta on (0, beta_max], mu on [mu_min, mu_max], l on [l_min, l_max].
  std::vector<Interval> coords;
  if (!beta_fixed) coords.push_back({0.0, result.box.beta_max});
  coords.push_back({result.box.mu_min, result.box.mu_max});
  coords.push_back({result.box.l_min, result.box.l_max});

  auto to_params = [&](std::span<const double> y) {
    OUParams t;
    std::size_t k = 0;
    t.beta = beta_fixed ? *beta_fixed : coords[k].map(y[k]);
    if (!beta_fixed) ++k;
    t.mu = coords[k].map(y[k]);
    t.l = coords[k + 1].map(y[k + 1]);
    return t;
  };
  auto objective = [&](std::span<const double> y) {
    try {
      return qn(to_params(y));
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_y;
  for (const auto& fractions : start_fractions(coords.size(), opt.starts)) {
    std::vector<double> y0(coords.size());
    for (std::size_t k = 0; k < coords.size(); ++k) y0[k] = coords[k].unmap_fraction(fractions[k]);
    result.start_objectives.push_back(objective(y0));
    const NelderMeadResult nm = nelder_mead(objective, y0, opt.nelder_mead);
    ++result.restarts_used;
    result.iterations += nm.iterations;
    result.evaluations += nm.evaluations + 1;
    if (nm.value < best) {
      best = nm.value;
      best_y = nm.x;
      result.converged = nm.converged;
    }
  }
  if (!std::isfinite(best)) throw EstimationError("no start produced a finite objective value");

  result.theta_hat = to_params(best_y);
  result.per_anchor_residuals = qn.residuals(result.theta_hat);
  result.objective = 0.0;
  for (double r : result.per_anchor_residuals) result.objective += r * r;
  return result;
}

}  // namespace

double objective_qn(const OUParams& theta, const QuantileAnchors& anchors, const DailyExtrema& data,
                    const CdfGrid& grid) {
  anchors.validate();
  return PreparedObjective(anchors, data, grid)(theta);
}

EstimationResult estimate(const DailyExtrema& data, std::optional<QuantileAnchors> anchors, const CdfGrid& grid,
                          const OptConfig& opt) {
  return run_estimation(data, std::nullopt, std::move(anchors), grid, opt);
}

EstimationResult estimate_2d(const DailyExtrema& data, double beta_fixed, std::optional<QuantileAnchors> anchors,
                             const CdfGrid& grid, const OptConfig& opt) {
  if (!(beta_fixed > 0.0)) throw ConfigError("fixed beta must be positive");
  return run_estimation(data, beta_fixed, std::move(anchors), grid, opt);
}

void StudyConfig::validate() const {
  theta0.validate();
  if (sample_sizes.empty()) throw ConfigError("study needs at least one sample size");
  for (int n : sample_sizes)
    if (n < 10) throw ConfigError("study sample sizes must be at least 10 days");
  if (replications < 1) throw ConfigError("study needs at least one replication");
  if (fixed_beta && !(*fixed_beta > 0.0)) throw ConfigError("study fixed beta must be positive");
}

StudyResult replication_study(const StudyConfig& cfg, const CdfGrid& grid, const OptConfig& opt) {
  cfg.validate();
  CdfGrid fit_grid = grid;
  fit_grid.workers = 1;
  const int longest = *std::max_element(cfg.sample_sizes.begin(), cfg.sample_sizes.end());
  const std::size_t per_rep = cfg.sample_sizes.size();

  StudyResult result;
  result.fits.resize(static_cast<std::size_t>(cfg.replications) * per_rep);
  // Build the shared bridge table once before fanning out.
  if (fit_grid.cache_enabled) cached_bridge_table(fit_grid.bridge, cfg.workers);
  parallel_for(static_cast<std::size_t>(cfg.replications), cfg.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      SimConfig sim;
      sim.dt = cfg.dt;
      sim.horizon_days = longest;
      sim.seed = cfg.seed;
      sim.domain = StreamDomain::Replication;
      sim.stream = r;
      const DailyExtrema full = simulate_daily_extrema(cfg.theta0, sim);
      for (std::size_t k = 0; k < per_rep; ++k) {
        ReplicationFit& fit = result.fits[r * per_rep + k];
        fit.replication = static_cast<int>(r);
        fit.n_days = cfg.sample_sizes[k];
        try {
          const DailyExtrema data = full.head(static_cast<std::size_t>(fit.n_days));
          const EstimationResult est = cfg.fixed_beta ? estimate_2d(data, *cfg.fixed_beta, std::nullopt, fit_grid, opt)
                                                      : estimate(data, std::nullopt, fit_grid, opt);
          fit.ok = true;
          fit.theta = est.theta_hat;
          fit.objective = est.objective;
          fit.converged = est.converged;
        } catch (const EstimationError& e) {
          fit.error = e.what();
        } catch (const DataError& e) {
          fit.error = e.what();
        }
      }
    }
  });

  for (std::size_t k = 0; k < per_rep; ++k) {
    StudySummary sum;
    sum.n_days = cfg.sample_sizes[k];
    double mb = 0, mm = 0, ml = 0, sb = 0, sm = 0, sl = 0;
    for (int r = 0; r < cfg.replications; ++r) {
      const ReplicationFit& fit = result.fits[static_cast<std::size_t>(r) * per_rep + k];
      if (!fit.ok) {
        ++sum.failures;
        continue;
      }
      ++sum.fits;
      mb += fit.theta.beta;
      mm += fit.theta.mu;
      ml += fit.theta.l;
      sb += std::pow(fit.theta.beta - cfg.theta0.beta, 2);
      sm += std::pow(fit.theta.mu - cfg.theta0.mu, 2);
      sl += std::pow(fit.theta.l - cfg.theta0.l, 2);
    }
    if (sum.fits > 0) {
      const double n = sum.fits;
      sum.mean = {mb / n, mm / n, ml / n};
      sum.relative_rmse = {std::sqrt(sb / n) / cfg.theta0.beta, std::sqrt(sm / n) / std::abs(cfg.theta0.mu),
                           std::sqrt(sl / n) / cfg.theta0.l};
    }
    result.summaries.push_back(sum);
  }
  return result;
}

namespace {

double lagged_correlation(const std::vector<double>& x, std::size_t lag) {
  const std::size_t n = x.size() - lag;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += x[i + lag];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = x[i + lag] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

MixingReport mixing_decay_check(const OUParams& params, const std::vector<int>& lags, int n_days,
                                std::uint64_t seed, double dt) {
  params.validate();
  if (n_days < 2) throw ConfigError("mixing check needs at least 2 days");
  SimConfig cfg;
  cfg.dt = dt;
  cfg.horizon_days = n_days;
  cfg.seed = seed;
  cfg.domain = StreamDomain::Mixing;
  const DailyExtrema data = simulate_daily_extrema(params, cfg);
  const double q80 = sample_quantile(data.sup, 0.8);
  std::vector<double> indicator(data.sup.size());
  for (std::size_t i = 0; i < indicator.size(); ++i) indicator[i] = data.sup[i] > q80 ? 1.0 : 0.0;

  MixingReport report;
  report.n_days = n_days;
  const double rate = params.relaxation_rate() * data.h;
  const double slack = 3.0 / std::sqrt(static_cast<double>(n_days));
  for (int lag : lags) {
    if (lag < 0 || lag >= n_days) throw ConfigError("mixing lag out of range");
    MixingLag m;
    m.lag = lag;
    m.gap_days = std::max(lag - 1, 0);
    m.corr_identity = lagged_correlation(data.sup, static_cast<std::size_t>(lag));
    m.corr_indicator = lagged_correlation(indicator, static_cast<std::size_t>(lag));
    m.bound = std::exp(-rate * m.gap_days);
    m.lag_bound = std::exp(-rate * lag);
    m.slack = slack;
    const double worst = std::max(std::abs(m.corr_identity), std::abs(m.corr_indicator));
    m.within_bound = worst <= m.bound + slack;
    m.within_lag_bound = worst <= m.lag_bound + slack;
    report.all_within = report.all_within && m.within_bound;
    report.lags.push_back(m);
  }
  return report;
}

InjectivityReport injectivity_probe(const std::vector<OUParams>& thetas, const QuantileAnchors& anchors,
                                    const CdfGrid& grid, double h) {
  if (thetas.size() < 2) throw ConfigError("injectivity probe needs at least two parameter points");
  anchors.validate();
  std::vector<std::vector<CdfValue>> images;
  images.reserve(thetas.size());
  for (const auto& t : thetas) {
    std::vector<CdfValue> row;
    for (double s : anchors.s_values) row.push_back(stationary_sup_cdf(s, t, h, grid));
    images.push_back(std::move(row));
  }
  InjectivityReport report;
  report.min_separation = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t k = i + 1; k < images.size(); ++k) {
      double dist = 0.0;
      double noise = 0.0;
      for (std::size_t j = 0; j < anchors.size(); ++j) {
        dist = std::max(dist, std::abs(images[i][j].p - images[k][j].p));
        noise = std::max(noise, std::hypot(images[i][j].mc_error, images[k][j].mc_error));
      }
      if (dist < report.min_separation) {
        report.min_separation = dist;
        report.max_noise = noise;
        report.closest_i = i;
        report.closest_j = k;
      }
    }
  }
  report.separated = report.min_separation > report.max_noise;
  return report;
}

}  // namespace ouheat
