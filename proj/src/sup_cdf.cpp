#include "ouheat/sup_cdf.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "ouheat/errors.hpp"
#include "ouheat/parallel.hpp"

namespace ouheat {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void CdfGrid::validate() const {
  if (u_steps < 8) throw ConfigError("CdfGrid.u_steps must be at least 8");
  if (x_nodes < 8) throw ConfigError("CdfGrid.x_nodes must be at least 8");
  if (x_lower_sigmas < 4.0) throw ConfigError("CdfGrid.x_lower_sigmas must be at least 4");
  if (bridge.paths < 2 || bridge.steps < 2) throw ConfigError("CdfGrid.bridge needs >= 2 paths and steps");
  if (max_mc_error && !(*max_mc_error > 0.0)) throw ConfigError("CdfGrid.max_mc_error must be positive");
}

namespace {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> x;
  std::vector<double> w;

  explicit GaussLegendre(int n) : x(n), w(n) {
    gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      gsl_integration_glfixed_point(-1.0, 1.0, static_cast<std::size_t>(i), &x[i], &w[i], table);
    gsl_integration_glfixed_table_free(table);
  }
};

struct HitProbability {
  double value = 0.0;
  double variance = 0.0;  ///< sum of squared weighted bridge std errors
};

/// Everything a hitting-probability evaluation needs besides (b, c).
class HitEvaluator {
 public:
  HitEvaluator(const OUParams& params, double t, const CdfGrid& grid)
      : l_(params.l),
        horizon_(t * params.beta),
        grid_(grid),
        inner_(grid.u_steps) {
    if (grid.cache_enabled) {
      table_ = cached_bridge_table(grid.bridge, grid.workers);
      gamma_max_ = table_->gamma_max();
    } else {
      gamma_max_ = grid.bridge.gamma_max;
    }
  }

  double gamma_max() const { return gamma_max_; }
  double horizon() const { return horizon_; }

  /// P(U hits b before `horizon` | U_0 = b - c), c > 0.
  HitProbability operator()(double b, double c) const {
    HitProbability out;
    if (!(horizon_ > 0.0) || !(c > 0.0)) return out;
    const double g_lo = c / std::sqrt(horizon_);
    if (g_lo >= gamma_max_) return out;
    const double half = 0.5 * (gamma_max_ - g_lo);
    const double mid = 0.5 * (gamma_max_ + g_lo);
    constexpr double kFirstPassage = 0.7978845608028654;  // sqrt(2/pi)
    for (std::size_t i = 0; i < inner_.x.size(); ++i) {
      const double g = mid + half * inner_.x[i];
      const double u = (c / g) * (c / g);
      const double density =
          kFirstPassage * std::exp(-0.5 * g * g - 0.5 * l_ * (2.0 * b * c - c * c - u));
      const BridgeExpectation e = expectation(g, u, b);
      const double weight = half * inner_.w[i] * density;
      out.value += weight * e.value;
      out.variance += weight * weight * e.std_error * e.std_error;
    }
    return out;
  }

 private:
  BridgeExpectation expectation(double g, double u, double b) const {
    if (table_) return table_->expectation(g, u, l_, b);
    // Uncached reference route: bridges simulated at exactly this g, with the
    // same per-path noise streams the table would use.
    const auto& s = grid_.bridge;
    std::vector<double> normals(static_cast<std::size_t>(s.steps) - 1);
    boost::random::normal_distribution<double> normal;
    const double kappa = 0.5 * l_ * l_;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int m = 0; m < s.paths; ++m) {
      Xoshiro256 rng = make_stream(s.seed, stream_id(StreamDomain::Bridge, static_cast<std::uint64_t>(m)));
      for (auto& z : normals) z = normal(rng);
      const auto mom = normalized_bridge_moments(g, normals, s.scheme);
      const double v = std::exp(-kappa * u * (u * mom.a2 - 2.0 * b * std::sqrt(u) * mom.a1 + b * b));
      sum += v;
      sum_sq += v * v;
    }
    const double n = s.paths;
    BridgeExpectation e;
    e.value = sum / n;
    e.std_error = std::sqrt(std::max(0.0, (sum_sq - n * e.value * e.value) / (n - 1.0)) / n);
    return e;
  }

  double l_;
  double horizon_;
  const CdfGrid& grid_;
  GaussLegendre inner_;
  std::shared_ptr<const BridgeMomentTable> table_;
  double gamma_max_ = 0.0;
};

void check_inputs(const OUParams& params, double t, const CdfGrid& grid) {
  params.validate();
  grid.validate();
  if (!(t > 0.0)) throw ConfigError("CDF window t must be positive");
}

CdfValue finalize(double raw, double mc_error, const CdfGrid& grid, const char* what) {
  const double slack = 2.0 * mc_error + 1e-9;
  if (raw < -slack || raw > 1.0 + slack) {
    std::ostringstream msg;
    msg << what << ": raw probability " << raw << " outside [0,1] beyond 2 x mc_error (" << mc_error << ")";
    throw CdfError(msg.str());
  }
  if (grid.max_mc_error && mc_error > *grid.max_mc_error) {
    std::ostringstream msg;
    msg << what << ": Monte Carlo error " << mc_error << " exceeds requested " << *grid.max_mc_error
        << "; increase bridge paths";
    throw CdfError(msg.str());
  }
  return {std::clamp(raw, 0.0, 1.0), mc_error, raw};
}

}  // namespace

CdfValue conditional_sup_cdf(double a, const OUParams& params, double t, double x, const CdfGrid& grid) {
  check_inputs(params, t, grid);
  if (a <= x) return {0.0, 0.0, 0.0};
  const HitEvaluator hit(params, t, grid);
  const HitProbability h = hit(a - params.mu, a - x);
  return finalize(1.0 - h.value, std::sqrt(h.variance), grid, "conditional_sup_cdf");
}

CdfValue conditional_inf_cdf(double a, const OUParams& params, double t, double x, const CdfGrid& grid) {
  check_inputs(params, t, grid);
  if (x <= a) return {1.0, 0.0, 1.0};
  // The infimum reaches a exactly when the mirrored process 2mu - X reaches
  // 2mu - a: level offset mu - a, distance x - a.
  const HitEvaluator hit(params, t, grid);
  const HitProbability h = hit(params.mu - a, x - a);
  return finalize(h.value, std::sqrt(h.variance), grid, "conditional_inf_cdf");
}

CdfValue stationary_sup_cdf(double a, const OUParams& params, double t, const CdfGrid& grid) {
  check_inputs(params, t, grid);
  const double b = a - params.mu;
  const double sd = params.stationary_sd();
  const double base = normal_cdf(b * std::sqrt(2.0 * params.l));
  const HitEvaluator hit(params, t, grid);
  const double c_max = std::min(b + grid.x_lower_sigmas * sd, hit.gamma_max() * std::sqrt(hit.horizon()));
  if (!(c_max > 0.0)) return finalize(base, 0.0, grid, "stationary_sup_cdf");

  const GaussLegendre outer(grid.x_nodes);
  const double half = 0.5 * c_max;
  const double density_scale = std::sqrt(params.l / std::numbers::pi);
  std::vector<double> terms(outer.x.size());
  std::vector<double> variances(outer.x.size());
  parallel_for(outer.x.size(), grid.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double c = half + half * outer.x[i];
      const double x_minus_mu = b - c;
      const double weight = half * outer.w[i] * density_scale * std::exp(-params.l * x_minus_mu * x_minus_mu);
      const HitProbability h = hit(b, c);
      terms[i] = weight * h.value;
      variances[i] = weight * weight * h.variance;
    }
  });
  double deficit = 0.0;
  double variance = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    deficit += terms[i];
    variance += variances[i];
  }
  return finalize(base - deficit, std::sqrt(variance), grid, "stationary_sup_cdf");
}

double sup_cdf_inverse(double p, const OUParams& params, double t, const CdfGrid& grid, double tolerance) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("sup_cdf_inverse: p must lie in (0, 1)");
  params.validate();
  const double sd = params.stationary_sd();
  double lo = params.mu - 10.0 * sd;
  double hi = params.mu + 10.0 * sd;
  const double f_lo = stationary_sup_cdf(lo, params, t, grid).p;
  const double f_hi = stationary_sup_cdf(hi, params, t, grid).p;
  if (p < f_lo || p > f_hi) {
    std::ostringstream msg;
    msg << "sup_cdf_inverse: p = " << p << " outside achievable range [" << f_lo << ", " << f_hi << "]";
    throw CdfError(msg.str());
  }
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (stationary_sup_cdf(mid, params, t, grid).p < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ouheat
