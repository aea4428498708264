#pragma once

/**
 * CDFs of the OU supremum and infimum over [0, t).
 *
 * Conditional on X_0 = x < a, the supremum stays below a iff the hitting
 * time of a exceeds t*beta in the time-changed process U_s = X_{s/beta} - mu
 * (dU = -l U ds + dW). Writing b = a - mu and c = a - x, the hitting density
 * is
 *
 *   f(u) = exp(-(l/2)(b^2 - (b-c)^2 - u)) * c/sqrt(2 pi u^3) * exp(-c^2/(2u))
 *          * E[exp(-(l^2/2) int_0^u (r_s - b)^2 ds)]
 *
 * with r a 3-d Bessel bridge from 0 to c over [0, u]. The u-integral is
 * evaluated in the normalized variable g = c / sqrt(u), where the Brownian
 * first-passage factor becomes sqrt(2/pi) exp(-g^2/2) dg and the bridge
 * expectation is read from a BridgeMomentTable at exactly that g.
 *
 * The stationary CDF integrates the conditional one against N(mu, 1/(2l)):
 *
 *   F*(a) = Phi((a-mu) sqrt(2l)) - int_0^cmax phi(a-c) P(hit within t | c) dc.
 */

#include <cstdint>
#include <memory>
#include <optional>

#include "ouheat/bessel_bridge.hpp"
#include "ouheat/ou_process.hpp"

namespace ouheat {

struct CdfGrid {
  /// Gauss-Legendre nodes of the inner (hitting-time) integral.
  int u_steps = 24;
  /// Gauss-Legendre nodes of the outer integral over the starting point.
  int x_nodes = 24;
  /// Outer integral truncated at mu - x_lower_sigmas * sd.
  double x_lower_sigmas = 8.0;
  /// Bridge Monte Carlo: paths, Euler steps per normalized bridge, scheme,
  /// and the normalized-endpoint grid of the moment table.
  BridgeMomentTable::Settings bridge{};
  /// Reuse the bridge table across evaluations. When off, every quadrature
  /// node simulates its own bridges at the exact normalized endpoint.
  bool cache_enabled = true;
  /// Reject evaluations whose propagated MC error exceeds this.
  std::optional<double> max_mc_error;
  int workers = 1;

  void validate() const;
};

struct CdfValue {
  double p = 0.0;         ///< clipped to [0, 1]
  double mc_error = 0.0;  ///< root-sum-square of quadrature-weighted bridge std errors
  double raw = 0.0;       ///< value before clipping
};

/// P(S_[0,t) <= a | X_0 = x); exactly 0 for a <= x.
CdfValue conditional_sup_cdf(double a, const OUParams& params, double t, double x, const CdfGrid& grid);

/// P(S_[0,t) <= a) under the stationary law.
CdfValue stationary_sup_cdf(double a, const OUParams& params, double t, const CdfGrid& grid);

/// P(I_[0,t) <= a | X_0 = x); exactly 1 for x <= a.
CdfValue conditional_inf_cdf(double a, const OUParams& params, double t, double x, const CdfGrid& grid);

/// Level a with stationary_sup_cdf(a) = p, by bisection on
/// [mu - 10 sd, mu + 10 sd] down to a bracket of `tolerance` degC.
double sup_cdf_inverse(double p, const OUParams& params, double t, const CdfGrid& grid, double tolerance = 1e-3);

/// Standard normal CDF.
double normal_cdf(double z);

}  // namespace ouheat
