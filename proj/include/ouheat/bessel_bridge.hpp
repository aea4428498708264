#pragma once

/**
 * 3-dimensional Bessel bridge functional of the OU hitting-time density.
 *
 * The bridge r runs from 0 (s = 0) to the endpoint a - x (s = u). It is
 * simulated backwards: the reversed bridge r~_s = r_{u-s} starts at the
 * endpoint and solves
 *
 *   dr~_s = (-r~_s / (u - s) + 1 / r~_s) ds + dB_s,   r~_u = 0.
 *
 * The functional of interest is
 *
 *   E[ exp(-(l^2/2) * int_0^u (r_s - offset)^2 ds) ]
 *
 * with offset = a - mu, and the time integral taken as the trapezoidal sum
 * over the Euler grid. The integral is invariant under time reversal, so it
 * is accumulated directly on r~.
 */

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ouheat/random.hpp"

namespace ouheat {

enum class BridgeScheme {
  /// Euler step with the 1/r drift taken implicitly:
  /// r' = (y + sqrt(y^2 + 4h)) / 2 where y is the explicit part of the step.
  /// Positive by construction.
  DriftImplicit,
  /// Plain explicit Euler, clamped at a floor of 1e-6 * endpoint.
  ExplicitClamped,
};

struct BridgeSpec {
  double u = 1.0;         ///< bridge duration (rescaled time units)
  double endpoint = 1.0;  ///< a - x > 0
  int steps = 200;        ///< Euler steps per path
  int paths = 10000;      ///< Monte Carlo size M
  BridgeScheme scheme = BridgeScheme::DriftImplicit;

  void validate() const;
};

/// max(200, ceil(u / delta)) uniform steps on [0, u].
int default_bridge_steps(double u, double delta = 5e-3);

struct BridgePath {
  /// r~ at s_k = k*u/steps, k = 0..steps; front() == endpoint, back() == 0.
  std::vector<double> reversed;
  long clamp_events = 0;

  /// r_s = r~_{u-s} on the same grid.
  std::vector<double> forward() const;
};

BridgePath simulate_reversed_bridge(const BridgeSpec& spec, Xoshiro256& rng);

struct BridgeExpectation {
  double value = 1.0;
  double std_error = 0.0;
  long clamp_events = 0;
};

/// Monte Carlo estimate over spec.paths bridges; path m uses stream
/// (seed, Bridge, m), so results do not depend on `workers`.
BridgeExpectation bridge_exponential_expectation(double l, double offset, const BridgeSpec& spec,
                                                 std::uint64_t seed, int workers = 1);

/**
 * Per-path time moments of normalized bridges.
 *
 * Brownian scaling maps a bridge of duration u and endpoint c onto a
 * unit-duration bridge rho with endpoint g = c / sqrt(u):
 * r_s = sqrt(u) * rho_{s/u}. The Euler scheme commutes with this scaling
 * when the step count is held fixed, so
 *
 *   int_0^u (r_s - b)^2 ds = u * (u*A2 - 2*b*sqrt(u)*A1 + b^2),
 *   A1 = int_0^1 rho, A2 = int_0^1 rho^2.
 *
 * The table stores (A1, A2) for every path on a uniform grid of g, with the
 * same driving noise for every g (common random numbers). Expectations for
 * any (l, b, u) are then one vectorized reduction over paths.
 */
class BridgeMomentTable {
 public:
  struct Settings {
    int paths = 10000;
    int steps = 500;
    double gamma_max = 8.5;
    double gamma_spacing = 0.05;
    BridgeScheme scheme = BridgeScheme::DriftImplicit;
    std::uint64_t seed = 20140101;

    bool operator==(const Settings&) const = default;
  };

  BridgeMomentTable(const Settings& settings, int workers = 1);

  const Settings& settings() const { return settings_; }
  int paths() const { return settings_.paths; }
  std::size_t gamma_count() const { return gamma_count_; }
  double gamma_at(std::size_t k) const { return static_cast<double>(k) * settings_.gamma_spacing; }
  double gamma_max() const { return gamma_at(gamma_count_ - 1); }
  std::span<const double> first_moments(std::size_t k) const;
  std::span<const double> second_moments(std::size_t k) const;
  long clamp_events() const { return clamp_events_; }

  /// E[exp(-(l^2/2) * int_0^u (r_s - b)^2 ds)] for a bridge of duration u
  /// and normalized endpoint g (linear interpolation between table nodes).
  BridgeExpectation expectation(double g, double u, double l, double b) const;

 private:
  Settings settings_;
  std::size_t gamma_count_ = 0;
  std::vector<double> a1_;
  std::vector<double> a2_;
  long clamp_events_ = 0;
};

/// Trapezoidal (A1, A2) of one normalized bridge started at g and driven by
/// `normals` (steps - 1 standard normal draws).
struct NormalizedMoments {
  double a1 = 0.0;
  double a2 = 0.0;
  long clamp_events = 0;
};
NormalizedMoments normalized_bridge_moments(double g, std::span<const double> normals, BridgeScheme scheme);

/// Process-wide table cache keyed by settings; safe for concurrent use.
std::shared_ptr<const BridgeMomentTable> cached_bridge_table(const BridgeMomentTable::Settings& settings,
                                                             int workers = 1);

namespace kernel {

struct Sums {
  double sum = 0.0;
  double sum_sq = 0.0;
};

/// Sum over paths of exp(-(c2*A2 - c1*A1 + c0)) and of its square.
Sums exp_quadratic(std::span<const double> a1, std::span<const double> a2, double c2, double c1, double c0);

/// As above for the per-path blend (1-w)*lo + w*hi of two table nodes.
Sums exp_quadratic_blend(std::span<const double> a1_lo, std::span<const double> a2_lo,
                         std::span<const double> a1_hi, std::span<const double> a2_hi, double w, double c2,
                         double c1, double c0);

/// Normalized bridges for every start value in `starts`, all driven by the
/// same `normals`; writes trapezoidal (A1, A2) per start. Returns the number
/// of clamp events (explicit scheme only).
long normalized_moments_batch(std::span<const double> starts, std::span<const double> normals,
                              BridgeScheme scheme, std::span<double> a1, std::span<double> a2);

}  // namespace kernel

}  // namespace ouheat
