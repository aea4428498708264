// ouheat: fit the OU temperature model to station suprema and compute
// heat-wave risk measures.
//
//   ouheat estimate --config run.json [--seed N] [--workers N] [--out-dir DIR]
//
// Exit codes: 0 ok, 1 other failure, 2 config error, 3 data error,
// 4 estimation failure.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ouheat/errors.hpp"
#include "ouheat/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", flags.seed, "RNG seed (overrides the config)");
  sub->add_option("--workers", flags.workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  sub->add_option("--out-dir", flags.out_dir, "output directory (overrides the config)");
}

int run(ouheat::Command command, const CommonFlags& flags) {
  ouheat::RunConfig cfg = ouheat::RunConfig::load(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.workers) cfg.workers = *flags.workers;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  const auto out = ouheat::run_command(command, cfg);
  for (const auto& f : out.files) std::cout << f.string() << '\n';
  std::cerr << ouheat::command_name(command) << " finished in " << out.runtime_seconds << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OU temperature model: estimation from daily suprema and heat-wave risk"};
  app.require_subcommand(1);
  CommonFlags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"estimate", "fit theta on the train seasons, then risk, QQ and prediction outputs"},
      {"risk", "heat-wave probability, mean duration and severity"},
      {"predict", "daily-maximum prediction intervals"},
      {"study", "simulated replication study of the estimator"},
      {"trajectories", "sample paths for a set of parameters"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(ouheat::parse_command(app.get_subcommands().front()->get_name()), flags);
  } catch (const ouheat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ouheat::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const ouheat::EstimationError& e) {
    std::cerr << "estimation failure: " << e.what() << '\n';
    return 4;
  } catch (const ouheat::CdfError& e) {
    std::cerr << "estimation failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
