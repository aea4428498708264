#pragma once

/**
 * Heat-wave risk measures by Monte Carlo over simulated summers.
 *
 * A heat wave is a run of at least `delta` consecutive days on which the
 * daily maxima stay above a_max and the daily minima above a_min (two
 * thresholds), or only the minima above a (single threshold).
 */

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "ouheat/ou_process.hpp"

namespace ouheat {

struct TwoThreshold {
  double a_max = 0.0;
  double a_min = 0.0;
};

struct SingleThreshold {
  double a = 0.0;
};

struct HeatwaveSpec {
  std::variant<TwoThreshold, SingleThreshold> definition = TwoThreshold{};
  int delta = 3;
  int season_days = 61;

  /// True when day i passes the daily conditions.
  bool day_qualifies(double sup, double inf) const;
  void validate() const;
};

struct Heatwave {
  int tau_in = 0;
  int tau_out = 0;  ///< one past the last day of the run
  int duration() const { return tau_out - tau_in; }
  bool operator==(const Heatwave&) const = default;
};

/// First heat wave of the season: tau_in is the first day starting `delta`
/// qualifying days, tau_out ends the uninterrupted run from tau_in.
std::optional<Heatwave> detect_heatwave(std::span<const double> sup, std::span<const double> inf,
                                        const HeatwaveSpec& spec);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct RiskOptions {
  double dt = 1e-3;
  int workers = 1;
};

struct SeasonStudy {
  Estimate probability;
  /// Mean of tau_out - tau_in over seasons with a heat wave; absent when
  /// no season had one.
  std::optional<Estimate> mean_duration;
  std::int64_t n_sims = 0;
  std::int64_t n_events = 0;
  int min_duration = 0;  ///< shortest observed heat wave (0 if none)
};

/// One pass over `n_sims` independent stationary summers. Season j uses
/// stream j of the Season domain, so results do not depend on `workers`.
SeasonStudy simulate_seasons(const OUParams& params, const HeatwaveSpec& spec, std::int64_t n_sims,
                             std::uint64_t seed, const RiskOptions& opt = {});

Estimate heatwave_probability(const OUParams& params, const HeatwaveSpec& spec, std::int64_t n_sims,
                              std::uint64_t seed, const RiskOptions& opt = {});

std::optional<Estimate> mean_duration(const OUParams& params, const HeatwaveSpec& spec, std::int64_t n_sims,
                                      std::uint64_t seed, const RiskOptions& opt = {});

struct SeverityStudy {
  std::optional<Estimate> area;  ///< degC * days; absent when no block qualified
  std::int64_t n_blocks = 0;
  std::int64_t n_events = 0;
};

/// E[ int_0^delta (X_s - a) ds | X_s >= a on [0, delta) ] from stationary
/// delta-day blocks. A block is abandoned as soon as the path drops below a.
SeverityStudy severity_area(const OUParams& params, double a, int delta, std::int64_t n_blocks,
                            std::uint64_t seed, const RiskOptions& opt = {});

struct RiskReport {
  Estimate probability;
  std::optional<Estimate> mean_duration;
  std::optional<Estimate> severity_area;
  std::int64_t n_sims = 0;
  std::int64_t n_events = 0;
  std::int64_t severity_blocks = 0;
  std::int64_t severity_events = 0;
  std::uint64_t seed = 0;
};

struct SeveritySpec {
  double a = 26.67;
  int delta = 3;
  std::int64_t n_blocks = 1000000;
};

RiskReport risk_report(const OUParams& params, const HeatwaveSpec& spec, std::int64_t n_sims,
                       const std::optional<SeveritySpec>& severity, std::uint64_t seed,
                       const RiskOptions& opt = {});

struct PredictionBand {
  int day = 0;
  double lower = 0.0;
  double median = 0.0;
  double upper = 0.0;
};

/// Per-day quantile band of the daily suprema of paths started at x0.
std::vector<PredictionBand> prediction_intervals(const OUParams& params, double x0, int horizon_days,
                                                 std::int64_t n_sims, double level, std::uint64_t seed,
                                                 const RiskOptions& opt = {});

}  // namespace ouheat
