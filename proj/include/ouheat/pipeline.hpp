#pragma once

/// End-to-end runs behind the CLI subcommands. Every run writes report.json
/// plus plain CSV plot data into the configured output directory; a failed
/// run removes whatever it had written.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ouheat/run_config.hpp"

namespace ouheat {

enum class Command { Estimate, Risk, Predict, Study, Trajectories };

Command parse_command(const std::string& name);
std::string command_name(Command c);

struct PipelineOutput {
  nlohmann::json report;
  std::vector<std::filesystem::path> files;
  double runtime_seconds = 0.0;
};

/// Runs one subcommand. `estimate` is the full chain: ingest, train sample,
/// bounds, fit, risk measures, QQ and prediction artifacts (and trajectories
/// when configured). Errors are rethrown with the failing stage in the
/// message and keep their type (ConfigError, DataError, ...).
PipelineOutput run_command(Command command, const RunConfig& cfg);

inline PipelineOutput run_pipeline(const RunConfig& cfg) { return run_command(Command::Estimate, cfg); }

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ouheat
