#include "ouheat/bessel_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "ouheat/errors.hpp"
#include "ouheat/parallel.hpp"

namespace ouheat {

void BridgeSpec::validate() const {
  if (!(u > 0.0)) throw ConfigError("bridge duration u must be positive");
  if (!(endpoint > 0.0)) throw ConfigError("bridge endpoint must be positive");
  if (steps < 2) throw ConfigError("bridge needs at least 2 Euler steps");
  if (paths < 1) throw ConfigError("bridge needs at least one Monte Carlo path");
}

int default_bridge_steps(double u, double delta) {
  if (!(u > 0.0) || !(delta > 0.0)) throw ConfigError("default_bridge_steps: u and delta must be positive");
  return std::max(200, static_cast<int>(std::ceil(u / delta)));
}

std::vector<double> BridgePath::forward() const { return {reversed.rbegin(), reversed.rend()}; }

namespace {

/// One step of the reversed bridge from grid point k; `remaining` = u - s_k.
inline double bridge_step(double r, double h, double remaining, double sqrt_h, double z, BridgeScheme scheme,
                          double floor, long& clamps) {
  if (scheme == BridgeScheme::DriftImplicit) {
    const double y = r - r * h / remaining + sqrt_h * z;
    return 0.5 * (y + std::sqrt(y * y + 4.0 * h));
  }
  double next = r + (-r / remaining + 1.0 / r) * h + sqrt_h * z;
  if (next < floor) {
    next = floor;
    ++clamps;
  }
  return next;
}

}  // namespace

BridgePath simulate_reversed_bridge(const BridgeSpec& spec, Xoshiro256& rng) {
  spec.validate();
  boost::random::normal_distribution<double> normal;
  const double h = spec.u / spec.steps;
  const double sqrt_h = std::sqrt(h);
  const double floor = 1e-6 * spec.endpoint;
  BridgePath path;
  path.reversed.resize(static_cast<std::size_t>(spec.steps) + 1);
  path.reversed[0] = spec.endpoint;
  double r = spec.endpoint;
  for (int k = 0; k + 1 < spec.steps; ++k) {
    const double remaining = spec.u - k * h;
    r = bridge_step(r, h, remaining, sqrt_h, normal(rng), spec.scheme, floor, path.clamp_events);
    path.reversed[static_cast<std::size_t>(k) + 1] = r;
  }
  path.reversed.back() = 0.0;
  return path;
}

BridgeExpectation bridge_exponential_expectation(double l, double offset, const BridgeSpec& spec,
                                                 std::uint64_t seed, int workers) {
  spec.validate();
  if (l == 0.0) return {};
  if (!(l > 0.0)) throw ConfigError("bridge expectation requires l >= 0");
  const double kappa = 0.5 * l * l;
  const double h = spec.u / spec.steps;
  std::vector<double> values(static_cast<std::size_t>(spec.paths));
  std::vector<long> clamps(values.size());
  parallel_for(values.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      Xoshiro256 rng = make_stream(seed, stream_id(StreamDomain::Bridge, m));
      const BridgePath path = simulate_reversed_bridge(spec, rng);
      const auto& r = path.reversed;
      double integral = 0.5 * ((r.front() - offset) * (r.front() - offset) + offset * offset);
      for (std::size_t k = 1; k + 1 < r.size(); ++k) integral += (r[k] - offset) * (r[k] - offset);
      integral *= h;
      values[m] = std::exp(-kappa * integral);
      clamps[m] = path.clamp_events;
    }
  });
  double sum = 0.0;
  double sum_sq = 0.0;
  long clamp_total = 0;
  for (std::size_t m = 0; m < values.size(); ++m) {
    sum += values[m];
    sum_sq += values[m] * values[m];
    clamp_total += clamps[m];
  }
  const double n = static_cast<double>(values.size());
  BridgeExpectation out;
  out.value = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * out.value * out.value) / (n - 1.0)) : 0.0;
  out.std_error = std::sqrt(var / n);
  out.clamp_events = clamp_total;
  return out;
}

NormalizedMoments normalized_bridge_moments(double g, std::span<const double> normals, BridgeScheme scheme) {
  const std::size_t steps = normals.size() + 1;
  const double h = 1.0 / static_cast<double>(steps);
  const double sqrt_h = std::sqrt(h);
  const double floor = 1e-6 * std::max(g, 1e-3);
  NormalizedMoments out;
  double r = scheme == BridgeScheme::ExplicitClamped ? std::max(g, floor) : g;
  double s1 = 0.5 * r;
  double s2 = 0.5 * r * r;
  for (std::size_t k = 0; k + 1 < steps; ++k) {
    const double remaining = 1.0 - static_cast<double>(k) * h;
    r = bridge_step(r, h, remaining, sqrt_h, normals[k], scheme, floor, out.clamp_events);
    s1 += r;
    s2 += r * r;
  }
  out.a1 = s1 * h;
  out.a2 = s2 * h;
  return out;
}

BridgeMomentTable::BridgeMomentTable(const Settings& settings, int workers) : settings_(settings) {
  if (settings.paths < 2) throw ConfigError("bridge table needs at least 2 paths");
  if (settings.steps < 2) throw ConfigError("bridge table needs at least 2 steps");
  if (!(settings.gamma_spacing > 0.0) || !(settings.gamma_max > settings.gamma_spacing))
    throw ConfigError("bridge table gamma grid is empty");
  gamma_count_ = static_cast<std::size_t>(std::ceil(settings.gamma_max / settings.gamma_spacing - 1e-9)) + 1;
  const auto m_count = static_cast<std::size_t>(settings.paths);
  a1_.resize(gamma_count_ * m_count);
  a2_.resize(gamma_count_ * m_count);
  std::vector<long> clamps(m_count, 0);
  std::vector<double> starts(gamma_count_);
  for (std::size_t k = 0; k < gamma_count_; ++k) starts[k] = gamma_at(k);
  parallel_for(m_count, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> normals(static_cast<std::size_t>(settings.steps) - 1);
    std::vector<double> m1(gamma_count_);
    std::vector<double> m2(gamma_count_);
    boost::random::normal_distribution<double> normal;
    for (std::size_t m = begin; m < end; ++m) {
      Xoshiro256 rng = make_stream(settings.seed, stream_id(StreamDomain::Bridge, m));
      for (auto& z : normals) z = normal(rng);
      clamps[m] = kernel::normalized_moments_batch(starts, normals, settings.scheme, m1, m2);
      for (std::size_t k = 0; k < gamma_count_; ++k) {
        a1_[k * m_count + m] = m1[k];
        a2_[k * m_count + m] = m2[k];
      }
    }
  });
  for (long c : clamps) clamp_events_ += c;
}

std::span<const double> BridgeMomentTable::first_moments(std::size_t k) const {
  const auto m = static_cast<std::size_t>(settings_.paths);
  return {a1_.data() + k * m, m};
}

std::span<const double> BridgeMomentTable::second_moments(std::size_t k) const {
  const auto m = static_cast<std::size_t>(settings_.paths);
  return {a2_.data() + k * m, m};
}

BridgeExpectation BridgeMomentTable::expectation(double g, double u, double l, double b) const {
  const double kappa = 0.5 * l * l;
  const double c2 = kappa * u * u;
  const double c1 = 2.0 * kappa * b * u * std::sqrt(u);
  const double c0 = kappa * b * b * u;
  const double pos = std::clamp(g, 0.0, gamma_max()) / settings_.gamma_spacing;
  auto k = static_cast<std::size_t>(pos);
  double w = pos - static_cast<double>(k);
  kernel::Sums sums;
  if (k + 1 >= gamma_count_) {
    k = gamma_count_ - 1;
    sums = kernel::exp_quadratic(first_moments(k), second_moments(k), c2, c1, c0);
  } else if (w < 1e-12) {
    sums = kernel::exp_quadratic(first_moments(k), second_moments(k), c2, c1, c0);
  } else {
    sums = kernel::exp_quadratic_blend(first_moments(k), second_moments(k), first_moments(k + 1),
                                       second_moments(k + 1), w, c2, c1, c0);
  }
  const double n = static_cast<double>(settings_.paths);
  BridgeExpectation out;
  out.value = sums.sum / n;
  const double var = std::max(0.0, (sums.sum_sq - n * out.value * out.value) / (n - 1.0));
  out.std_error = std::sqrt(var / n);
  return out;
}

std::shared_ptr<const BridgeMomentTable> cached_bridge_table(const BridgeMomentTable::Settings& settings,
                                                             int workers) {
  static std::mutex mutex;
  static std::vector<std::shared_ptr<const BridgeMomentTable>> cache;
  std::lock_guard lock(mutex);
  for (const auto& t : cache)
    if (t->settings() == settings) return t;
  auto table = std::make_shared<const BridgeMomentTable>(settings, workers);
  cache.push_back(table);
  // Tables are tens of megabytes; keep only a few distinct configurations.
  if (cache.size() > 4) cache.erase(cache.begin());
  return table;
}

}  // namespace ouheat
