// Compiled with -ffast-math (see src/CMakeLists.txt) so these loops vectorize.
#include <algorithm>
#include <cmath>
#include <vector>

#include "ouheat/bessel_bridge.hpp"

namespace ouheat::kernel {

Sums exp_quadratic(std::span<const double> a1, std::span<const double> a2, double c2, double c1, double c0) {
  double sum = 0.0;
  double sum_sq = 0.0;
  const std::size_t n = a1.size();
  const double* p1 = a1.data();
  const double* p2 = a2.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::exp(c1 * p1[i] - c2 * p2[i] - c0);
    sum += v;
    sum_sq += v * v;
  }
  return {sum, sum_sq};
}

Sums exp_quadratic_blend(std::span<const double> a1_lo, std::span<const double> a2_lo,
                         std::span<const double> a1_hi, std::span<const double> a2_hi, double w, double c2,
                         double c1, double c0) {
  double sum = 0.0;
  double sum_sq = 0.0;
  const double w_lo = 1.0 - w;
  const std::size_t n = a1_lo.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = std::exp(c1 * a1_lo[i] - c2 * a2_lo[i] - c0);
    const double hi = std::exp(c1 * a1_hi[i] - c2 * a2_hi[i] - c0);
    const double v = w_lo * lo + w * hi;
    sum += v;
    sum_sq += v * v;
  }
  return {sum, sum_sq};
}

}  // namespace ouheat::kernel

namespace ouheat::kernel {

long normalized_moments_batch(std::span<const double> starts, std::span<const double> normals,
                              BridgeScheme scheme, std::span<double> a1, std::span<double> a2) {
  const std::size_t count = starts.size();
  const std::size_t steps = normals.size() + 1;
  const double h = 1.0 / static_cast<double>(steps);
  const double sqrt_h = std::sqrt(h);
  std::vector<double> r(starts.begin(), starts.end());
  std::vector<double> floors(count);
  for (std::size_t j = 0; j < count; ++j) floors[j] = 1e-6 * std::max(starts[j], 1e-3);
  if (scheme == BridgeScheme::ExplicitClamped)
    for (std::size_t j = 0; j < count; ++j) r[j] = std::max(r[j], floors[j]);
  for (std::size_t j = 0; j < count; ++j) {
    a1[j] = 0.5 * r[j];
    a2[j] = 0.5 * r[j] * r[j];
  }
  long clamps = 0;
  double* rp = r.data();
  double* s1 = a1.data();
  double* s2 = a2.data();
  for (std::size_t k = 0; k + 1 < steps; ++k) {
    const double remaining = 1.0 - static_cast<double>(k) * h;
    const double keep = 1.0 - h / remaining;
    const double shock = sqrt_h * normals[k];
    if (scheme == BridgeScheme::DriftImplicit) {
      for (std::size_t j = 0; j < count; ++j) {
        const double y = rp[j] * keep + shock;
        const double next = 0.5 * (y + std::sqrt(y * y + 4.0 * h));
        rp[j] = next;
        s1[j] += next;
        s2[j] += next * next;
      }
    } else {
      for (std::size_t j = 0; j < count; ++j) {
        double next = rp[j] * keep + h / rp[j] + shock;
        if (next < floors[j]) {
          next = floors[j];
          ++clamps;
        }
        rp[j] = next;
        s1[j] += next;
        s2[j] += next * next;
      }
    }
  }
  for (std::size_t j = 0; j < count; ++j) {
    s1[j] *= h;
    s2[j] *= h;
  }
  return clamps;
}

}  // namespace ouheat::kernel
