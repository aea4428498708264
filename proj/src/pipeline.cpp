#include "ouheat/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ouheat/errors.hpp"

namespace ouheat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

/// Reruns `fn`, prefixing any library error with the stage name.
template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  const std::string tag = std::string("[") + name + "] ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(tag + e.what());
  } catch (const DataError& e) {
    throw DataError(tag + e.what());
  } catch (const EstimationError& e) {
    throw EstimationError(tag + e.what());
  } catch (const CdfError& e) {
    throw CdfError(tag + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(tag + e.what());
  }
}

std::string num(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

json quantity(double value, const char* unit) { return {{"value", value}, {"unit", unit}}; }

json quantity(const Estimate& e, const char* unit) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"unit", unit}};
}

json theta_json(const OUParams& t) {
  return {{"beta", quantity(t.beta, "degC^2/day")}, {"mu", quantity(t.mu, "degC")}, {"l", quantity(t.l, "1/degC^2")}};
}

/// Tracks written files so a failed run can remove them.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (created_dir_) fs::remove(dir_, ec);  // only if still empty
  }

  std::ofstream open(const std::string& name) {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    }
    const fs::path p = dir_ / name;
    files_.push_back(p);
    std::ofstream out(p);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
  }

  void commit() { committed_ = true; }
  const std::vector<fs::path>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_dir_ = false;
  bool committed_ = false;
};

struct FitStage {
  StationDataset ds;
  SeasonSample sample;
  EstimationResult fit;
};

StationDataset load_station(const RunConfig& cfg) {
  if (!cfg.data) throw ConfigError("no data source configured");
  return ingest(cfg.data->path, cfg.data->format, cfg.data->tn_path);
}

CdfGrid run_grid(const RunConfig& cfg) {
  CdfGrid g = cfg.grid;
  g.workers = cfg.workers;
  return g;
}

FitStage fit_station(const RunConfig& cfg) {
  FitStage s;
  s.ds = stage("ingest", [&] { return load_station(cfg); });
  s.sample = stage("train_sample", [&] { return build_train_sample(s.ds, cfg); });
  stage("bounds", [&] {
    compute_param_box(s.sample.data).validate();
    return 0;
  });
  s.fit = stage("estimate", [&] {
    const auto anchors = QuantileAnchors::from_data(s.sample.data, cfg.anchor_levels);
    return estimate(s.sample.data, anchors, run_grid(cfg), cfg.optimizer);
  });
  return s;
}

json sample_json(const SeasonSample& s, const StationDataset& ds) {
  json drops = json::array();
  for (const auto& d : s.drops) drops.push_back({{"year", d.year}, {"expected_days", d.expected}, {"dropped_days", d.dropped}});
  return {{"station_id", ds.station_id},
          {"days", s.data.size()},
          {"segments", s.data.segment_starts.size()},
          {"dropped_days", s.dropped_total()},
          {"per_season", drops},
          {"warnings", s.warnings}};
}

json fit_json(const EstimationResult& e) {
  json box = {{"beta_max", quantity(e.box.beta_max, "degC^2/day")},
              {"mu_min", quantity(e.box.mu_min, "degC")},
              {"mu_max", quantity(e.box.mu_max, "degC")},
              {"l_min", quantity(e.box.l_min, "1/degC^2")},
              {"l_max", quantity(e.box.l_max, "1/degC^2")},
              {"warnings", e.box.warnings}};
  json anchors = json::array();
  for (std::size_t j = 0; j < e.anchors.size(); ++j)
    anchors.push_back({{"level", e.anchors.levels[j]},
                       {"s", quantity(e.anchors.s_values[j], "degC")},
                       {"residual", e.per_anchor_residuals[j]}});
  return {{"theta_hat", theta_json(e.theta_hat)},
          {"objective", e.objective},
          {"box", box},
          {"anchors", anchors},
          {"iterations", e.iterations},
          {"evaluations", e.evaluations},
          {"starts", e.restarts_used},
          {"start_objectives", e.start_objectives},
          {"converged", e.converged},
          {"fixed_beta", e.fixed_beta ? json(*e.fixed_beta) : json(nullptr)}};
}

json risk_json(const RiskReport& r, const RunConfig& cfg) {
  json j = {{"probability", quantity(r.probability, "1")},
            {"mean_duration", r.mean_duration ? quantity(*r.mean_duration, "day") : json(nullptr)},
            {"seasons", r.n_sims},
            {"seasons_with_heatwave", r.n_events},
            {"dt", quantity(cfg.risk.dt, "day")},
            {"seed", r.seed}};
  if (cfg.risk.severity) {
    j["severity_area"] = r.severity_area ? quantity(*r.severity_area, "degC*day") : json(nullptr);
    j["severity_blocks"] = r.severity_blocks;
    j["severity_qualifying_blocks"] = r.severity_events;
  }
  return j;
}

RiskReport run_risk(const OUParams& theta, const RunConfig& cfg) {
  return stage("risk", [&] {
    RiskOptions opt{cfg.risk.dt, cfg.workers};
    return risk_report(theta, cfg.risk.spec, cfg.risk.n_sims, cfg.risk.severity, cfg.seed, opt);
  });
}

json write_qq(const SeasonSample& sample, const OUParams& theta, const RunConfig& cfg, OutputSet& out) {
  return stage("qq", [&] {
    const CdfGrid grid = run_grid(cfg);
    std::vector<double> theo;
    std::vector<double> emp;
    auto f = out.open("qq.csv");
    f << "level,theoretical_degC,empirical_degC\n";
    for (int k = 1; k <= 19; ++k) {
      const double p = 0.05 * k;
      theo.push_back(sup_cdf_inverse(p, theta, sample.data.h, grid));
      emp.push_back(sample_quantile(sample.data.sup, p));
      f << num(p) << ',' << num(theo.back()) << ',' << num(emp.back()) << '\n';
    }
    return json{{"levels", theo.size()}, {"spearman", spearman(theo, emp)}, {"file", "qq.csv"}};
  });
}

/// Start of the forecast: explicit date, else the season start of the first
/// test year.
std::optional<Date> prediction_start(const RunConfig& cfg) {
  if (cfg.prediction.start) return cfg.prediction.start;
  if (cfg.test_years.empty()) return std::nullopt;
  const int y = *std::min_element(cfg.test_years.begin(), cfg.test_years.end());
  return Date{std::chrono::year{y}, std::chrono::month{cfg.season.start.month}, std::chrono::day{cfg.season.start.day}};
}

json write_prediction(const OUParams& theta, const StationDataset* ds, const RunConfig& cfg, OutputSet& out) {
  return stage("prediction", [&] {
    const auto start = prediction_start(cfg);
    double x0 = 0.0;
    if (cfg.prediction.x0) {
      x0 = *cfg.prediction.x0;
    } else {
      if (!start || !ds) throw ConfigError("prediction needs x0 or a start date with station data");
      const Date before{std::chrono::sys_days{*start} - std::chrono::days{1}};
      const auto idx = ds->find(before);
      if (!idx || !ds->valid(*idx)) throw DataError("no valid record on " + format_date(before) + " for the start value");
      x0 = 0.5 * (ds->tmax[*idx] + ds->tmin[*idx]);
    }
    const auto bands = prediction_intervals(theta, x0, cfg.prediction.horizon_days, cfg.prediction.n_sims,
                                            cfg.prediction.level, cfg.seed, RiskOptions{cfg.prediction.dt, cfg.workers});
    auto f = out.open("prediction.csv");
    f << "day,date,lower_degC,median_degC,upper_degC,observed_degC,inside\n";
    int observed = 0;
    int inside = 0;
    for (const auto& b : bands) {
      std::string date;
      double obs = std::nan("");
      if (start) {
        const Date d{std::chrono::sys_days{*start} + std::chrono::days{b.day}};
        date = format_date(d);
        if (ds) {
          const auto idx = ds->find(d);
          if (idx && ds->valid(*idx)) obs = ds->tmax[*idx];
        }
      }
      std::string in;
      if (!std::isnan(obs)) {
        ++observed;
        const bool ok = obs >= b.lower && obs <= b.upper;
        inside += ok;
        in = ok ? "1" : "0";
      }
      f << b.day + 1 << ',' << date << ',' << num(b.lower) << ',' << num(b.median) << ',' << num(b.upper) << ','
        << num(obs) << ',' << in << '\n';
    }
    return json{{"x0", quantity(x0, "degC")},
                {"start", start ? json(format_date(*start)) : json(nullptr)},
                {"horizon_days", cfg.prediction.horizon_days},
                {"level", cfg.prediction.level},
                {"simulations", cfg.prediction.n_sims},
                {"observed_days", observed},
                {"observed_inside", inside},
                {"file", "prediction.csv"}};
  });
}

json write_trajectories(const RunConfig& cfg, OutputSet& out) {
  return stage("trajectories", [&] {
    const auto& tc = cfg.trajectories;
    if (tc.params.empty()) throw ConfigError("trajectories.params is empty");
    auto f = out.open("trajectories.csv");
    f << "set,beta,mu,l,time_day,x_degC\n";
    for (std::size_t k = 0; k < tc.params.size(); ++k) {
      SimConfig sim;
      sim.dt = tc.dt;
      sim.horizon_days = tc.days;
      sim.seed = cfg.seed;
      sim.initial = FixedStart{tc.x0};
      sim.domain = StreamDomain::Trajectory;
      sim.stream = k;
      const auto path = simulate_path(tc.params[k], sim);
      for (std::size_t i = 0; i < path.size(); i += static_cast<std::size_t>(tc.stride))
        f << k << ',' << num(tc.params[k].beta) << ',' << num(tc.params[k].mu) << ',' << num(tc.params[k].l) << ','
          << num(static_cast<double>(i) * tc.dt) << ',' << num(path[i]) << '\n';
    }
    return json{{"sets", tc.params.size()}, {"days", tc.days}, {"file", "trajectories.csv"}};
  });
}

json run_study(const RunConfig& cfg, OutputSet& out) {
  return stage("study", [&] {
    StudyConfig sc = cfg.study;
    sc.seed = cfg.seed;
    sc.workers = cfg.workers;
    const StudyResult res = replication_study(sc, cfg.grid, cfg.optimizer);
    auto f = out.open("replications.csv");
    f << "replication,n_days,ok,beta,mu,l,objective,converged\n";
    for (const auto& r : res.fits)
      f << r.replication << ',' << r.n_days << ',' << r.ok << ',' << (r.ok ? num(r.theta.beta) : "") << ','
        << (r.ok ? num(r.theta.mu) : "") << ',' << (r.ok ? num(r.theta.l) : "") << ',' << (r.ok ? num(r.objective) : "")
        << ',' << r.converged << '\n';
    json sums = json::array();
    for (const auto& s : res.summaries)
      sums.push_back({{"n_days", s.n_days},
                      {"fits", s.fits},
                      {"failures", s.failures},
                      {"mean", theta_json(s.mean)},
                      {"relative_rmse", {{"beta", s.relative_rmse.beta}, {"mu", s.relative_rmse.mu}, {"l", s.relative_rmse.l}}}});
    return json{{"theta0", theta_json(sc.theta0)},
                {"replications", sc.replications},
                {"fixed_beta", sc.fixed_beta ? json(*sc.fixed_beta) : json(nullptr)},
                {"summaries", sums},
                {"file", "replications.csv"}};
  });
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "estimate") return Command::Estimate;
  if (name == "risk") return Command::Risk;
  if (name == "predict") return Command::Predict;
  if (name == "study") return Command::Study;
  if (name == "trajectories") return Command::Trajectories;
  throw ConfigError("unknown command '" + name + "'");
}

std::string command_name(Command c) {
  switch (c) {
    case Command::Estimate: return "estimate";
    case Command::Risk: return "risk";
    case Command::Predict: return "predict";
    case Command::Study: return "study";
    case Command::Trajectories: return "trajectories";
  }
  return "?";
}

PipelineOutput run_command(Command command, const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  OutputSet out(cfg.out_dir);
  json report = {{"schema_version", kSchemaVersion}, {"command", command_name(command)}, {"config", cfg.to_json()}};

  // Parameters for risk/predict: configured, or fitted on the station data.
  std::optional<FitStage> fitted;
  auto theta_for_run = [&]() -> OUParams {
    if (cfg.params && command != Command::Estimate) return *cfg.params;
    fitted = fit_station(cfg);
    report["sample"] = sample_json(fitted->sample, fitted->ds);
    report["fit"] = fit_json(fitted->fit);
    return fitted->fit.theta_hat;
  };

  switch (command) {
    case Command::Estimate: {
      const OUParams theta = theta_for_run();
      report["qq"] = write_qq(fitted->sample, theta, cfg, out);
      report["risk"] = risk_json(run_risk(theta, cfg), cfg);
      if (cfg.prediction.x0 || prediction_start(cfg)) report["prediction"] = write_prediction(theta, &fitted->ds, cfg, out);
      if (!cfg.trajectories.params.empty()) report["trajectories"] = write_trajectories(cfg, out);
      break;
    }
    case Command::Risk: {
      const OUParams theta = theta_for_run();
      report["theta"] = theta_json(theta);
      report["risk"] = risk_json(run_risk(theta, cfg), cfg);
      break;
    }
    case Command::Predict: {
      const OUParams theta = theta_for_run();
      report["theta"] = theta_json(theta);
      std::optional<StationDataset> ds;
      if (fitted) {
        ds = fitted->ds;
      } else if (cfg.data) {
        ds = stage("ingest", [&] { return load_station(cfg); });
      }
      report["prediction"] = write_prediction(theta, ds ? &*ds : nullptr, cfg, out);
      break;
    }
    case Command::Study:
      report["study"] = run_study(cfg, out);
      break;
    case Command::Trajectories:
      report["trajectories"] = write_trajectories(cfg, out);
      break;
  }

  {
    auto f = out.open("report.json");
    f << report.dump(2) << '\n';
    if (!f) throw DataError("failed writing report.json");
  }
  PipelineOutput result;
  result.report = std::move(report);
  result.files = out.files();
  result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.commit();
  return result;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("spearman needs two equal-length samples of size >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace ouheat
