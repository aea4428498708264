#pragma once

/// JSON run configuration shared by the CLI subcommands.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ouheat/estimator.hpp"
#include "ouheat/risk.hpp"
#include "ouheat/station_data.hpp"
#include "ouheat/sup_cdf.hpp"

namespace ouheat {

struct DataSource {
  std::filesystem::path path;
  StationFormat format = StationFormat::EcaBlend;
  std::optional<std::filesystem::path> tn_path;
};

struct RiskConfig {
  HeatwaveSpec spec{TwoThreshold{31.0, 21.0}, 3, 61};
  std::int64_t n_sims = 1000000;
  double dt = 1e-2;
  std::optional<SeveritySpec> severity;
};

struct PredictionConfig {
  /// First forecast day; the start value is the mean of tmax and tmin on
  /// the day before, unless x0 is given.
  std::optional<Date> start;
  std::optional<double> x0;
  int horizon_days = 10;
  std::int64_t n_sims = 1000;
  double level = 0.95;
  double dt = 1e-3;
};

struct TrajectoryConfig {
  std::vector<OUParams> params;
  int days = 10;
  double dt = 1e-3;
  /// Keep every `stride`-th Euler sample.
  int stride = 10;
  double x0 = 22.0;
};

struct RunConfig {
  std::optional<DataSource> data;
  SeasonWindow season;
  std::vector<int> train_years;
  std::vector<int> test_years;
  std::vector<double> anchor_levels{0.2, 0.4, 0.6, 0.8};
  CdfGrid grid;
  OptConfig optimizer;
  /// Fixed parameters for risk/predict runs without a fit.
  std::optional<OUParams> params;
  RiskConfig risk;
  PredictionConfig prediction;
  StudyConfig study;
  TrajectoryConfig trajectories;
  std::uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path out_dir = "out";

  /// Relative paths in `j` resolve against `base_dir`.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  /// Throws ConfigError on inconsistent settings (e.g. train and test years
  /// overlap).
  void validate() const;
};

/// Train-sample builder driven by the config's season window and train years.
SeasonSample build_train_sample(const StationDataset& ds, const RunConfig& cfg);

}  // namespace ouheat
