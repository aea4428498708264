#include "ouheat/ou_process.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ouheat/errors.hpp"
#include "ouheat/random.hpp"

namespace ouheat {

double OUParams::stationary_sd() const { return std::sqrt(stationary_variance()); }

void OUParams::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ConfigError("OU parameter beta must be positive, got " + std::to_string(beta));
  if (!(l > 0.0) || !std::isfinite(l))
    throw ConfigError("OU parameter l must be positive, got " + std::to_string(l));
  if (!std::isfinite(mu)) throw ConfigError("OU parameter mu must be finite");
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || dt > 1.0) throw ConfigError("simulation step dt must lie in (0, 1]");
  if (horizon_days < 1) throw ConfigError("simulation horizon must be at least one day");
  const double per_day = 1.0 / dt;
  if (std::abs(per_day - std::round(per_day)) > 1e-6 * per_day)
    throw ConfigError("simulation step dt must divide one day evenly");
}

int SimConfig::steps_per_day() const { return static_cast<int>(std::lround(1.0 / dt)); }

namespace {

void check_sim_params(const OUParams& p) {
  if (!(p.beta >= 0.0) || !(p.l > 0.0) || !std::isfinite(p.mu))
    throw ConfigError("simulation requires beta >= 0, l > 0 and finite mu");
}

/// Yields X_0, X_1, ... of the Euler scheme.
class EulerStepper {
 public:
  EulerStepper(const OUParams& p, const SimConfig& cfg)
      : normal_(make_stream(cfg.seed, stream_id(cfg.domain, cfg.stream))),
        mu_(p.mu),
        keep_(1.0 - p.l * p.beta * cfg.dt),
        noise_(std::sqrt(p.beta * cfg.dt)) {
    if (std::holds_alternative<FixedStart>(cfg.initial)) {
      y_ = std::get<FixedStart>(cfg.initial).x0 - mu_;
    } else {
      y_ = p.stationary_sd() * normal_();
    }
  }

  double mu() const { return mu_; }
  double centered() const { return y_; }
  double current() const { return mu_ + y_; }
  double advance() {
    y_ = keep_ * y_ + noise_ * normal_();
    return mu_ + y_;
  }

  /// Same draws as repeated advance(), in the same order, but the normals
  /// are produced in one batch first. `visit` sees the centered value.
  template <class Visit>
  void advance_many(std::vector<double>& buffer, Visit&& visit) {
    for (auto& z : buffer) z = noise_ * normal_();
    double y = y_;
    for (double z : buffer) {
      y = keep_ * y + z;
      visit(y);
    }
    y_ = y;
  }

 private:
  NormalSource normal_;
  double mu_;
  double keep_;
  double noise_;
  double y_ = 0.0;  // X - mu
};

}  // namespace

void DailyExtrema::validate() const {
  if (!(h > 0.0)) throw DataError("observation window h must be positive");
  if (inf) {
    if (inf->size() != sup.size()) throw DataError("sup and inf series differ in length");
    for (std::size_t i = 0; i < sup.size(); ++i)
      if ((*inf)[i] > sup[i])
        throw DataError("infimum exceeds supremum on day " + std::to_string(i));
  }
  if (!sup.empty() && (segment_starts.empty() || segment_starts.front() != 0))
    throw DataError("segment starts must begin at 0");
  for (std::size_t k = 1; k < segment_starts.size(); ++k)
    if (segment_starts[k] <= segment_starts[k - 1] || segment_starts[k] >= sup.size())
      throw DataError("segment starts must be strictly increasing and in range");
}

DailyExtrema DailyExtrema::shifted(double c) const {
  DailyExtrema out = *this;
  for (auto& v : out.sup) v += c;
  if (out.inf)
    for (auto& v : *out.inf) v += c;
  return out;
}

DailyExtrema DailyExtrema::head(std::size_t n) const {
  DailyExtrema out;
  n = std::min(n, sup.size());
  out.h = h;
  out.sup.assign(sup.begin(), sup.begin() + static_cast<std::ptrdiff_t>(n));
  if (inf) out.inf = std::vector<double>(inf->begin(), inf->begin() + static_cast<std::ptrdiff_t>(n));
  out.segment_starts.clear();
  for (auto s : segment_starts)
    if (s < n) out.segment_starts.push_back(s);
  if (out.segment_starts.empty()) out.segment_starts.push_back(0);
  return out;
}

std::vector<double> simulate_path(const OUParams& params, const SimConfig& cfg) {
  check_sim_params(params);
  cfg.validate();
  const std::size_t steps = static_cast<std::size_t>(cfg.horizon_days) * cfg.steps_per_day();
  std::vector<double> path;
  path.reserve(steps + 1);
  EulerStepper stepper(params, cfg);
  path.push_back(stepper.current());
  for (std::size_t k = 0; k < steps; ++k) path.push_back(stepper.advance());
  return path;
}

DailyExtrema extract_daily_extrema(std::span<const double> path, double dt) {
  if (!(dt > 0.0) || dt > 1.0) throw ConfigError("extract_daily_extrema: dt must lie in (0, 1]");
  const auto per_day = static_cast<std::size_t>(std::lround(1.0 / dt));
  if (path.size() < per_day) throw DataError("path is shorter than one day");
  const std::size_t days = path.size() / per_day;
  DailyExtrema out;
  out.sup.resize(days);
  out.inf = std::vector<double>(days);
  for (std::size_t d = 0; d < days; ++d) {
    const auto first = path.begin() + static_cast<std::ptrdiff_t>(d * per_day);
    const auto [lo, hi] = std::minmax_element(first, first + static_cast<std::ptrdiff_t>(per_day));
    out.sup[d] = *hi;
    (*out.inf)[d] = *lo;
  }
  return out;
}

DailyExtrema simulate_daily_extrema(const OUParams& params, const SimConfig& cfg) {
  check_sim_params(params);
  cfg.validate();
  const int per_day = cfg.steps_per_day();
  DailyExtrema out;
  out.sup.resize(cfg.horizon_days);
  out.inf = std::vector<double>(cfg.horizon_days);
  EulerStepper stepper(params, cfg);
  std::vector<double> buffer(static_cast<std::size_t>(per_day));
  // Extrema of the centered path; mu + max(y) == max(mu + y) since rounding
  // is monotone.
  double hi = stepper.centered();
  double lo = hi;
  for (int d = 0; d < cfg.horizon_days; ++d) {
    // The last step of the batch is the first sample of the next day.
    std::size_t k = 0;
    double next = 0.0;
    stepper.advance_many(buffer, [&](double x) {
      if (++k == buffer.size()) {
        next = x;
        return;
      }
      hi = std::max(hi, x);
      lo = std::min(lo, x);
    });
    out.sup[d] = stepper.mu() + hi;
    (*out.inf)[d] = stepper.mu() + lo;
    hi = lo = next;
  }
  return out;
}

double empirical_sup_cdf(const DailyExtrema& data, double a) {
  if (data.sup.empty()) throw DataError("empirical CDF of an empty sample");
  const auto count = std::count_if(data.sup.begin(), data.sup.end(), [a](double s) { return s <= a; });
  return static_cast<double>(count) / static_cast<double>(data.sup.size());
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace ouheat
