#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ouheat {

struct NelderMeadOptions {
  int max_iterations = 300;
  /// Stop once every vertex lies within this sup-norm distance of the best.
  double tolerance = 1e-3;
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Standard Nelder-Mead simplex (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2) on an unconstrained objective. Non-finite objective values are
/// treated as +infinity.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options = {});

}  // namespace ouheat
