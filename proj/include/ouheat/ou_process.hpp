#pragma once

/**
 * Stationary Ornstein-Uhlenbeck temperature model
 *
 *   dX_t = l*beta*(mu - X_t) dt + sqrt(beta) dB_t,   X_0 ~ N(mu, 1/(2l))
 *
 * simulated by Euler-Maruyama, together with the daily-extrema extraction
 * that turns a fine path into the observed series.
 */

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "ouheat/random.hpp"

namespace ouheat {

struct OUParams {
  double beta = 0.0;  ///< volatility scale, degC^2/day
  double mu = 0.0;    ///< stationary mean, degC
  double l = 0.0;     ///< 1 / (2 * stationary variance), 1/degC^2

  double stationary_variance() const { return 1.0 / (2.0 * l); }
  double stationary_sd() const;
  /// Mean-reversion rate l*beta, 1/day.
  double relaxation_rate() const { return l * beta; }

  /// Throws ConfigError unless beta > 0 and l > 0.
  void validate() const;
};

struct StationaryStart {};
struct FixedStart {
  double x0 = 0.0;
};
using InitialCondition = std::variant<StationaryStart, FixedStart>;

struct SimConfig {
  double dt = 1e-3;  ///< Euler step, days; 1/dt must be an integer
  int horizon_days = 1;
  std::uint64_t seed = 0;
  InitialCondition initial = StationaryStart{};
  /// Stream within the seed's family; lets callers run many independent
  /// simulations under one seed.
  StreamDomain domain = StreamDomain::Path;
  std::uint64_t stream = 0;

  void validate() const;
  /// Euler steps per day (1/dt).
  int steps_per_day() const;
};

/// Per-day suprema (and optionally infima) over windows [i*h, (i+1)*h).
struct DailyExtrema {
  std::vector<double> sup;
  std::optional<std::vector<double>> inf;
  double h = 1.0;
  /// Indices where a new run of consecutive days starts (always contains 0
  /// for non-empty data). Pooled seasons from different years are separate
  /// runs; consecutive-day statistics never straddle a run boundary.
  std::vector<std::size_t> segment_starts{0};

  std::size_t size() const { return sup.size(); }
  bool has_inf() const { return inf.has_value(); }
  void validate() const;
  /// Same data shifted by `c` degC.
  DailyExtrema shifted(double c) const;
  /// First `n` days (segments clipped accordingly).
  DailyExtrema head(std::size_t n) const;
};

/// Euler-Maruyama path sampled at k*dt, k = 0..horizon_days/dt (inclusive).
/// beta = 0 is allowed here (deterministic relaxation).
std::vector<double> simulate_path(const OUParams& params, const SimConfig& cfg);

/// Daily sup/inf of a path sampled at step dt; day i covers samples with
/// time in [i, i+1). A trailing partial day is dropped.
DailyExtrema extract_daily_extrema(std::span<const double> path, double dt);

/// simulate_path followed by extract_daily_extrema without materializing the
/// path. Bit-identical to the two-step route for the same config.
DailyExtrema simulate_daily_extrema(const OUParams& params, const SimConfig& cfg);

/// Fraction of daily suprema <= a.
double empirical_sup_cdf(const DailyExtrema& data, double a);

/// Type-7 (linear interpolation) sample quantile; `values` need not be sorted.
double sample_quantile(std::vector<double> values, double p);

}  // namespace ouheat
