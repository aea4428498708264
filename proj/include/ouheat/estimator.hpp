#pragma once

/**
 * Quantile least-squares estimation of the OU parameters from daily suprema.
 *
 *   Q_n(theta) = sum_j [F*(s_j, theta, h) - F_n*(s_j)]^2
 *
 * minimized over a data-driven box by multi-start Nelder-Mead. The anchors
 * s_j are empirical quantiles of the suprema, frozen at setup. F* is a
 * Monte Carlo quantity, but the bridge noise is frozen once per grid (common
 * random numbers), so Q_n is a deterministic function during optimization.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ouheat/nelder_mead.hpp"
#include "ouheat/ou_process.hpp"
#include "ouheat/sup_cdf.hpp"

namespace ouheat {

struct QuantileAnchors {
  std::vector<double> levels{0.2, 0.4, 0.6, 0.8};
  /// Empirical quantiles s_j of the suprema at `levels`.
  std::vector<double> s_values;

  static QuantileAnchors from_data(const DailyExtrema& data, std::vector<double> levels = {0.2, 0.4, 0.6, 0.8});
  std::size_t size() const { return s_values.size(); }
  void validate() const;
};

struct ParamBox {
  double beta_max = 0.0;
  double mu_min = 0.0;
  double mu_max = 0.0;
  double l_min = 0.0;
  double l_max = 0.0;
  /// Problems found while deriving the bounds (e.g. l_max < l_min).
  std::vector<std::string> warnings;

  bool contains(const OUParams& theta) const;
  /// Throws EstimationError if the box is empty or ill-formed.
  void validate() const;
};

/**
 * Bounds from sup/inf data:
 *  - mu in [mean of infima, mean of suprema];
 *  - l >= 1/(2 D^2), D = max(|rec_min - m_max|, |rec_max - m_min|);
 *  - l <= min over probes x of -ln(p_x)/x^2, p_x the exceedance frequency of
 *    centered suprema above x, probes at their 0.7/0.8/0.9/0.95 quantiles and
 *    p_x floored at 1/(2n) (sub-Gaussian tail bound of the supremum);
 *  - beta <= (1/T) sum max[(S_{i+1} - I_i)^2, (I_{i+1} - S_i)^2] over
 *    consecutive days within each segment.
 */
ParamBox compute_param_box(const DailyExtrema& data);

double objective_qn(const OUParams& theta, const QuantileAnchors& anchors, const DailyExtrema& data,
                    const CdfGrid& grid);

struct OptConfig {
  NelderMeadOptions nelder_mead{};
  /// Deterministic starts: box center, then 25%/75% coordinate mixes.
  int starts = 4;
};

struct EstimationResult {
  OUParams theta_hat;
  double objective = 0.0;
  ParamBox box;
  QuantileAnchors anchors;
  int iterations = 0;
  int evaluations = 0;
  int restarts_used = 0;
  bool converged = false;
  /// F*(s_j, theta_hat) - F_n*(s_j).
  std::vector<double> per_anchor_residuals;
  /// Q_n at each start point, in start order.
  std::vector<double> start_objectives;
  std::optional<double> fixed_beta;
};

EstimationResult estimate(const DailyExtrema& data, std::optional<QuantileAnchors> anchors, const CdfGrid& grid,
                          const OptConfig& opt = {});

/// Same pipeline with beta frozen; optimizes (mu, l) only.
EstimationResult estimate_2d(const DailyExtrema& data, double beta_fixed, std::optional<QuantileAnchors> anchors,
                             const CdfGrid& grid, const OptConfig& opt = {});

struct StudyConfig {
  OUParams theta0{47.5, 22.0, 0.02};
  /// Each replication simulates max(sample_sizes) days and is fitted on
  /// its first n days for every n listed.
  std::vector<int> sample_sizes{1000, 100};
  int replications = 50;
  double dt = 1e-3;
  /// When set, (mu, l) are fitted with beta frozen at this value.
  std::optional<double> fixed_beta;
  std::uint64_t seed = 1;
  /// Replications run in parallel; each fit itself is sequential.
  int workers = 1;

  void validate() const;
};

struct ReplicationFit {
  int replication = 0;
  int n_days = 0;
  bool ok = false;
  OUParams theta;
  double objective = 0.0;
  bool converged = false;
  std::string error;
};

struct StudySummary {
  int n_days = 0;
  int fits = 0;
  int failures = 0;
  OUParams mean;
  /// sqrt(mean((theta_hat - theta0)^2)) / theta0, per coordinate.
  OUParams relative_rmse;
};

struct StudyResult {
  std::vector<ReplicationFit> fits;  ///< replication-major, sample sizes in config order
  std::vector<StudySummary> summaries;
};

/// Simulated-data study: replication r uses stream r of the Replication
/// domain, so results do not depend on the worker count.
StudyResult replication_study(const StudyConfig& cfg, const CdfGrid& grid, const OptConfig& opt = {});

struct MixingLag {
  int lag = 0;       ///< day-index lag r between S_i and S_{i+r}
  int gap_days = 0;  ///< separation of the two daily windows, max(r - 1, 0)
  double corr_identity = 0.0;
  double corr_indicator = 0.0;  ///< of 1{S > q_0.8}
  double bound = 1.0;           ///< exp(-l beta gap_days)
  double lag_bound = 1.0;       ///< exp(-l beta r), the bound read with the index lag
  double slack = 0.0;           ///< 3 / sqrt(n_days)
  bool within_bound = false;
  bool within_lag_bound = false;
};

struct MixingReport {
  std::vector<MixingLag> lags;
  int n_days = 0;
  bool all_within = true;
};

/// Empirical decay of correlations between daily suprema against the
/// exponential rho-mixing bound.
MixingReport mixing_decay_check(const OUParams& params, const std::vector<int>& lags, int n_days,
                                std::uint64_t seed = 1, double dt = 1e-3);

struct InjectivityReport {
  double min_separation = 0.0;  ///< smallest sup-norm distance between anchor vectors
  double max_noise = 0.0;       ///< largest combined MC error of a compared pair
  bool separated = false;
  std::size_t closest_i = 0;
  std::size_t closest_j = 0;
};

/// Checks that distinct parameter points map to distinguishable anchor-CDF
/// vectors (F*(s_j, theta))_j.
InjectivityReport injectivity_probe(const std::vector<OUParams>& thetas, const QuantileAnchors& anchors,
                                    const CdfGrid& grid, double h = 1.0);

}  // namespace ouheat
