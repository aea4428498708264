#include "ouheat/risk.hpp"

#include <algorithm>
#include <cmath>

#include "ouheat/errors.hpp"
#include "ouheat/parallel.hpp"
#include "ouheat/random.hpp"

namespace ouheat {

bool HeatwaveSpec::day_qualifies(double sup, double inf) const {
  if (const auto* two = std::get_if<TwoThreshold>(&definition)) return sup >= two->a_max && inf >= two->a_min;
  return inf >= std::get<SingleThreshold>(definition).a;
}

void HeatwaveSpec::validate() const {
  if (delta < 1) throw ConfigError("heat wave delta must be at least 1 day");
  if (season_days < delta) throw ConfigError("season shorter than the heat wave delta");
  if (const auto* two = std::get_if<TwoThreshold>(&definition))
    if (!(two->a_min < two->a_max)) throw ConfigError("heat wave a_min must be below a_max");
}

std::optional<Heatwave> detect_heatwave(std::span<const double> sup, std::span<const double> inf,
                                        const HeatwaveSpec& spec) {
  if (sup.size() != inf.size()) throw DataError("detect_heatwave: sup and inf differ in length");
  const int n = static_cast<int>(sup.size());
  int run = 0;
  for (int i = 0; i < n; ++i) {
    if (!spec.day_qualifies(sup[i], inf[i])) {
      run = 0;
      continue;
    }
    if (++run < spec.delta) continue;
    Heatwave hw;
    hw.tau_in = i + 1 - spec.delta;
    int end = i + 1;
    while (end < n && spec.day_qualifies(sup[end], inf[end])) ++end;
    hw.tau_out = end;
    return hw;
  }
  return std::nullopt;
}

namespace {

void check_common(const OUParams& params, std::int64_t n, const RiskOptions& opt) {
  params.validate();
  if (n < 1) throw ConfigError("Monte Carlo size must be at least 1");
  if (!(opt.dt > 0.0) || opt.dt > 1.0) throw ConfigError("risk dt must lie in (0, 1]");
}

// Fixed reduction blocks keep floating sums independent of the worker count.
constexpr std::int64_t kChunk = 4096;

std::size_t chunk_count(std::int64_t n) { return static_cast<std::size_t>((n + kChunk - 1) / kChunk); }

Estimate mean_with_error(double sum, double sum_sq, std::int64_t count) {
  const double n = static_cast<double>(count);
  const double m = sum / n;
  const double var = count > 1 ? std::max(sum_sq - n * m * m, 0.0) / (n - 1.0) : 0.0;
  return {m, std::sqrt(var / n)};
}

}  // namespace

SeasonStudy simulate_seasons(const OUParams& params, const HeatwaveSpec& spec, std::int64_t n_sims,
                             std::uint64_t seed, const RiskOptions& opt) {
  check_common(params, n_sims, opt);
  spec.validate();

  struct Partial {
    std::int64_t events = 0;
    std::int64_t dur_sum = 0;
    std::int64_t dur_sq = 0;
    int dur_min = 0;
  };
  std::vector<Partial> parts(chunk_count(n_sims));
  parallel_for(parts.size(), opt.workers, [&](std::size_t begin, std::size_t end) {
    SimConfig cfg;
    cfg.dt = opt.dt;
    cfg.horizon_days = spec.season_days;
    cfg.seed = seed;
    cfg.domain = StreamDomain::Season;
    for (std::size_t c = begin; c < end; ++c) {
      Partial& part = parts[c];
      const std::int64_t last = std::min<std::int64_t>(n_sims, (static_cast<std::int64_t>(c) + 1) * kChunk);
      for (std::int64_t j = static_cast<std::int64_t>(c) * kChunk; j < last; ++j) {
        cfg.stream = static_cast<std::uint64_t>(j);
        const DailyExtrema season = simulate_daily_extrema(params, cfg);
        const auto hw = detect_heatwave(season.sup, *season.inf, spec);
        if (!hw) continue;
        const int d = hw->duration();
        ++part.events;
        part.dur_sum += d;
        part.dur_sq += static_cast<std::int64_t>(d) * d;
        part.dur_min = part.dur_min == 0 ? d : std::min(part.dur_min, d);
      }
    }
  });

  SeasonStudy out;
  out.n_sims = n_sims;
  std::int64_t dur_sum = 0;
  std::int64_t dur_sq = 0;
  for (const auto& p : parts) {
    out.n_events += p.events;
    dur_sum += p.dur_sum;
    dur_sq += p.dur_sq;
    if (p.dur_min > 0) out.min_duration = out.min_duration == 0 ? p.dur_min : std::min(out.min_duration, p.dur_min);
  }
  const double p = static_cast<double>(out.n_events) / static_cast<double>(n_sims);
  out.probability = {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n_sims))};
  if (out.n_events > 0)
    out.mean_duration = mean_with_error(static_cast<double>(dur_sum), static_cast<double>(dur_sq), out.n_events);
  return out;
}

Estimate heatwave_probability(const OUParams& params, const HeatwaveSpec& spec, std::int64_t n_sims,
                              std::uint64_t seed, const RiskOptions& opt) {
  return simulate_seasons(params, spec, n_sims, seed, opt).probability;
}

std::optional<Estimate> mean_duration(const OUParams& params, const HeatwaveSpec& spec, std::int64_t n_sims,
                                      std::uint64_t seed, const RiskOptions& opt) {
  return simulate_seasons(params, spec, n_sims, seed, opt).mean_duration;
}

SeverityStudy severity_area(const OUParams& params, double a, int delta, std::int64_t n_blocks,
                            std::uint64_t seed, const RiskOptions& opt) {
  check_common(params, n_blocks, opt);
  if (delta < 1) throw ConfigError("severity delta must be at least 1 day");
  const auto per_day = static_cast<std::int64_t>(std::lround(1.0 / opt.dt));
  if (std::abs(static_cast<double>(per_day) * opt.dt - 1.0) > 1e-9) throw ConfigError("1/dt must be an integer");
  const std::int64_t steps = per_day * delta;
  const double sd = params.stationary_sd();
  const double decay = params.relaxation_rate() * opt.dt;
  const double noise = std::sqrt(params.beta * opt.dt);

  struct Partial {
    std::int64_t events = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
  };
  std::vector<Partial> parts(chunk_count(n_blocks));
  parallel_for(parts.size(), opt.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      Partial& part = parts[c];
      const std::int64_t last = std::min<std::int64_t>(n_blocks, (static_cast<std::int64_t>(c) + 1) * kChunk);
      for (std::int64_t j = static_cast<std::int64_t>(c) * kChunk; j < last; ++j) {
        NormalSource normal(make_stream(seed, stream_id(StreamDomain::SeverityBlock, static_cast<std::uint64_t>(j))));
        double x = params.mu + sd * normal();
        double area = 0.0;
        std::int64_t k = 0;
        // Left Riemann sum over samples 0..steps-1, the same samples whose
        // minimum forms the daily infima of the block.
        for (; k < steps && x >= a; ++k) {
          area += x - a;
          x += decay * (params.mu - x) + noise * normal();
        }
        if (k < steps) continue;
        area *= opt.dt;
        ++part.events;
        part.sum += area;
        part.sum_sq += area * area;
      }
    }
  });

  SeverityStudy out;
  out.n_blocks = n_blocks;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& p : parts) {
    out.n_events += p.events;
    sum += p.sum;
    sum_sq += p.sum_sq;
  }
  if (out.n_events > 0) out.area = mean_with_error(sum, sum_sq, out.n_events);
  return out;
}

RiskReport risk_report(const OUParams& params, const HeatwaveSpec& spec, std::int64_t n_sims,
                       const std::optional<SeveritySpec>& severity, std::uint64_t seed, const RiskOptions& opt) {
  const SeasonStudy seasons = simulate_seasons(params, spec, n_sims, seed, opt);
  RiskReport report;
  report.probability = seasons.probability;
  report.mean_duration = seasons.mean_duration;
  report.n_sims = seasons.n_sims;
  report.n_events = seasons.n_events;
  report.seed = seed;
  if (severity) {
    const SeverityStudy sev = severity_area(params, severity->a, severity->delta, severity->n_blocks, seed, opt);
    report.severity_area = sev.area;
    report.severity_blocks = sev.n_blocks;
    report.severity_events = sev.n_events;
  }
  return report;
}

std::vector<PredictionBand> prediction_intervals(const OUParams& params, double x0, int horizon_days,
                                                 std::int64_t n_sims, double level, std::uint64_t seed,
                                                 const RiskOptions& opt) {
  if (horizon_days < 1) throw ConfigError("prediction horizon must be at least 1 day");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("prediction level must lie in (0, 1)");
  if (n_sims < 1) throw ConfigError("Monte Carlo size must be at least 1");

  // sups[d * n + j]: day d supremum of path j.
  const auto n = static_cast<std::size_t>(n_sims);
  std::vector<double> sups(static_cast<std::size_t>(horizon_days) * n);
  parallel_for(n, opt.workers, [&](std::size_t begin, std::size_t end) {
    SimConfig cfg;
    cfg.dt = opt.dt;
    cfg.horizon_days = horizon_days;
    cfg.seed = seed;
    cfg.initial = FixedStart{x0};
    cfg.domain = StreamDomain::Prediction;
    for (std::size_t j = begin; j < end; ++j) {
      cfg.stream = j;
      const DailyExtrema path = simulate_daily_extrema(params, cfg);
      for (int d = 0; d < horizon_days; ++d) sups[static_cast<std::size_t>(d) * n + j] = path.sup[d];
    }
  });

  const double tail = (1.0 - level) / 2.0;
  std::vector<PredictionBand> bands;
  for (int d = 0; d < horizon_days; ++d) {
    const auto first = sups.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(d) * n);
    std::vector<double> day(first, first + static_cast<std::ptrdiff_t>(n));
    bands.push_back({d, sample_quantile(day, tail), sample_quantile(day, 0.5), sample_quantile(day, 1.0 - tail)});
  }
  return bands;
}

}  // namespace ouheat
