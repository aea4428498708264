#include "ouheat/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ouheat/errors.hpp"

namespace ouheat {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options) {
  const std::size_t n = start.size();
  if (n == 0) throw ConfigError("nelder_mead: empty start point");
  NelderMeadResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += options.initial_step;
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n);
  std::vector<double> trial(n);
  auto point = [&](double t, std::vector<double>& out, const std::vector<double>& worst) {
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + t * (worst[j] - centroid[j]);
  };

  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    {
      std::vector<std::vector<double>> s(n + 1);
      std::vector<double> v(n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        s[i] = std::move(simplex[order[i]]);
        v[i] = values[order[i]];
      }
      simplex = std::move(s);
      values = std::move(v);
    }
    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j) diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[0][j]));
    if (diameter < options.tolerance && std::isfinite(values[0])) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) break;
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
    const auto& worst = simplex[n];

    point(-1.0, trial, worst);
    const double reflected = eval(trial);
    if (reflected < values[0]) {
      std::vector<double> expanded(n);
      point(-2.0, expanded, worst);
      const double ev = eval(expanded);
      if (ev < reflected) {
        simplex[n] = expanded;
        values[n] = ev;
      } else {
        simplex[n] = trial;
        values[n] = reflected;
      }
      continue;
    }
    if (reflected < values[n - 1]) {
      simplex[n] = trial;
      values[n] = reflected;
      continue;
    }
    std::vector<double> contracted(n);
    const bool outside = reflected < values[n];
    point(outside ? -0.5 : 0.5, contracted, worst);
    const double cv = eval(contracted);
    if (cv < (outside ? reflected : values[n])) {
      simplex[n] = contracted;
      values[n] = cv;
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
      values[i] = eval(simplex[i]);
    }
  }
  result.x = simplex[0];
  result.value = values[0];
  return result;
}

}  // namespace ouheat
