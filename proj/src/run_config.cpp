#include "ouheat/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ouheat/errors.hpp"

namespace ouheat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T value{};
  read(j, key, value, where);
  out = value;
}

OUParams read_theta(const json& j, const std::string& where) {
  if (j.is_array()) {
    if (j.size() != 3) throw ConfigError(where + ": expected [beta, mu, l]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  }
  allow_keys(j, where, {"beta", "mu", "l"});
  OUParams t;
  read(j, "beta", t.beta, where);
  read(j, "mu", t.mu, where);
  read(j, "l", t.l, where);
  return t;
}

json theta_json(const OUParams& t) { return {{"beta", t.beta}, {"mu", t.mu}, {"l", t.l}}; }

/// [1950, 1951, ...] or {"from": 1950, "to": 1984}.
std::vector<int> read_years(const json& j, const std::string& where) {
  if (j.is_array()) return j.get<std::vector<int>>();
  allow_keys(j, where, {"from", "to"});
  const int from = j.at("from").get<int>();
  const int to = j.at("to").get<int>();
  if (to < from) throw ConfigError(where + ": 'to' precedes 'from'");
  std::vector<int> years;
  for (int y = from; y <= to; ++y) years.push_back(y);
  return years;
}

MonthDay read_month_day(const json& j, const std::string& where) {
  const auto s = j.get<std::string>();
  unsigned m = 0;
  unsigned d = 0;
  char dash = 0;
  std::istringstream in(s);
  if (!(in >> m >> dash >> d) || dash != '-' || !in.eof()) throw ConfigError(where + ": expected MM-DD, got '" + s + "'");
  return {m, d};
}

std::string month_day_string(const MonthDay& md) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02u-%02u", md.month, md.day);
  return buf;
}

BridgeScheme read_scheme(const std::string& s) {
  if (s == "drift_implicit") return BridgeScheme::DriftImplicit;
  if (s == "explicit_clamped") return BridgeScheme::ExplicitClamped;
  throw ConfigError("unknown bridge scheme '" + s + "'");
}

void read_grid(const json& j, CdfGrid& g) {
  const std::string w = "cdf_grid";
  allow_keys(j, w, {"u_steps", "x_nodes", "x_lower_sigmas", "paths", "steps", "gamma_max", "gamma_spacing", "scheme",
                    "bridge_seed", "cache", "max_mc_error"});
  read(j, "u_steps", g.u_steps, w);
  read(j, "x_nodes", g.x_nodes, w);
  read(j, "x_lower_sigmas", g.x_lower_sigmas, w);
  read(j, "paths", g.bridge.paths, w);
  read(j, "steps", g.bridge.steps, w);
  read(j, "gamma_max", g.bridge.gamma_max, w);
  read(j, "gamma_spacing", g.bridge.gamma_spacing, w);
  if (j.contains("scheme")) g.bridge.scheme = read_scheme(j.at("scheme").get<std::string>());
  read(j, "bridge_seed", g.bridge.seed, w);
  read(j, "cache", g.cache_enabled, w);
  read_opt(j, "max_mc_error", g.max_mc_error, w);
}

HeatwaveSpec read_heatwave(const json& j, HeatwaveSpec spec, const std::string& w) {
  std::string definition = std::holds_alternative<TwoThreshold>(spec.definition) ? "two_threshold" : "single_threshold";
  read(j, "definition", definition, w);
  if (definition == "two_threshold") {
    TwoThreshold t = std::holds_alternative<TwoThreshold>(spec.definition) ? std::get<TwoThreshold>(spec.definition)
                                                                            : TwoThreshold{};
    read(j, "a_max", t.a_max, w);
    read(j, "a_min", t.a_min, w);
    spec.definition = t;
  } else if (definition == "single_threshold") {
    SingleThreshold t;
    if (const auto* s = std::get_if<SingleThreshold>(&spec.definition)) t = *s;
    read(j, "a", t.a, w);
    spec.definition = t;
  } else {
    throw ConfigError(w + ".definition must be two_threshold or single_threshold");
  }
  read(j, "delta", spec.delta, w);
  read(j, "season_days", spec.season_days, w);
  return spec;
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() || base.empty() ? p : base / p; }

}  // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  allow_keys(j, "config", {"schema_version", "data", "season", "train_years", "test_years", "anchor_levels", "cdf_grid",
                           "optimizer", "params", "risk", "prediction", "study", "trajectories", "seed", "workers",
                           "out_dir"});
  if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1)
    throw ConfigError("unsupported config schema_version " + j.at("schema_version").dump());
  RunConfig cfg;
  const std::string root = "config";

  if (j.contains("data")) {
    const json& d = j.at("data");
    allow_keys(d, "data", {"path", "format", "tn_path"});
    DataSource src;
    src.path = resolve(d.at("path").get<std::string>(), base_dir);
    src.format = parse_station_format(d.value("format", std::string("eca_blend")));
    if (d.contains("tn_path")) src.tn_path = resolve(d.at("tn_path").get<std::string>(), base_dir);
    cfg.data = src;
  }
  if (j.contains("season")) {
    const json& s = j.at("season");
    allow_keys(s, "season", {"start", "end"});
    if (s.contains("start")) cfg.season.start = read_month_day(s.at("start"), "season.start");
    if (s.contains("end")) cfg.season.end = read_month_day(s.at("end"), "season.end");
  }
  if (j.contains("train_years")) cfg.train_years = read_years(j.at("train_years"), "train_years");
  if (j.contains("test_years")) cfg.test_years = read_years(j.at("test_years"), "test_years");
  read(j, "anchor_levels", cfg.anchor_levels, root);
  if (j.contains("cdf_grid")) read_grid(j.at("cdf_grid"), cfg.grid);

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    const std::string w = "optimizer";
    allow_keys(o, w, {"max_iterations", "tolerance", "initial_step", "starts"});
    read(o, "max_iterations", cfg.optimizer.nelder_mead.max_iterations, w);
    read(o, "tolerance", cfg.optimizer.nelder_mead.tolerance, w);
    read(o, "initial_step", cfg.optimizer.nelder_mead.initial_step, w);
    read(o, "starts", cfg.optimizer.starts, w);
  }
  if (j.contains("params") && !j.at("params").is_null()) cfg.params = read_theta(j.at("params"), "params");

  if (j.contains("risk")) {
    const json& r = j.at("risk");
    const std::string w = "risk";
    allow_keys(r, w, {"definition", "a_max", "a_min", "a", "delta", "season_days", "n_sims", "dt", "severity"});
    cfg.risk.spec = read_heatwave(r, cfg.risk.spec, w);
    read(r, "n_sims", cfg.risk.n_sims, w);
    read(r, "dt", cfg.risk.dt, w);
    if (r.contains("severity") && !r.at("severity").is_null()) {
      const json& s = r.at("severity");
      allow_keys(s, "risk.severity", {"a", "delta", "blocks"});
      SeveritySpec sev;
      read(s, "a", sev.a, "risk.severity");
      read(s, "delta", sev.delta, "risk.severity");
      read(s, "blocks", sev.n_blocks, "risk.severity");
      cfg.risk.severity = sev;
    }
  }
  if (j.contains("prediction")) {
    const json& p = j.at("prediction");
    const std::string w = "prediction";
    allow_keys(p, w, {"start", "x0", "horizon_days", "n_sims", "level", "dt"});
    if (p.contains("start") && !p.at("start").is_null()) cfg.prediction.start = parse_date(p.at("start").get<std::string>());
    read_opt(p, "x0", cfg.prediction.x0, w);
    read(p, "horizon_days", cfg.prediction.horizon_days, w);
    read(p, "n_sims", cfg.prediction.n_sims, w);
    read(p, "level", cfg.prediction.level, w);
    read(p, "dt", cfg.prediction.dt, w);
  }
  if (j.contains("study")) {
    const json& s = j.at("study");
    const std::string w = "study";
    allow_keys(s, w, {"theta0", "sample_sizes", "replications", "dt", "fixed_beta"});
    if (s.contains("theta0")) cfg.study.theta0 = read_theta(s.at("theta0"), "study.theta0");
    read(s, "sample_sizes", cfg.study.sample_sizes, w);
    read(s, "replications", cfg.study.replications, w);
    read(s, "dt", cfg.study.dt, w);
    read_opt(s, "fixed_beta", cfg.study.fixed_beta, w);
  }
  if (j.contains("trajectories")) {
    const json& t = j.at("trajectories");
    const std::string w = "trajectories";
    allow_keys(t, w, {"params", "days", "dt", "stride", "x0"});
    if (t.contains("params"))
      for (const auto& p : t.at("params")) cfg.trajectories.params.push_back(read_theta(p, "trajectories.params"));
    read(t, "days", cfg.trajectories.days, w);
    read(t, "dt", cfg.trajectories.dt, w);
    read(t, "stride", cfg.trajectories.stride, w);
    read(t, "x0", cfg.trajectories.x0, w);
  }
  read(j, "seed", cfg.seed, root);
  read(j, "workers", cfg.workers, root);
  if (j.contains("out_dir")) cfg.out_dir = resolve(j.at("out_dir").get<std::string>(), base_dir);
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

json RunConfig::to_json() const {
  json j;
  j["schema_version"] = 1;
  if (data) {
    j["data"] = {{"path", data->path.string()},
                 {"format", data->format == StationFormat::EcaBlend ? "eca_blend" : "csv_simple"}};
    if (data->tn_path) j["data"]["tn_path"] = data->tn_path->string();
  }
  j["season"] = {{"start", month_day_string(season.start)}, {"end", month_day_string(season.end)}};
  j["train_years"] = train_years;
  j["test_years"] = test_years;
  j["anchor_levels"] = anchor_levels;
  j["cdf_grid"] = {{"u_steps", grid.u_steps},
                   {"x_nodes", grid.x_nodes},
                   {"x_lower_sigmas", grid.x_lower_sigmas},
                   {"paths", grid.bridge.paths},
                   {"steps", grid.bridge.steps},
                   {"gamma_max", grid.bridge.gamma_max},
                   {"gamma_spacing", grid.bridge.gamma_spacing},
                   {"scheme", grid.bridge.scheme == BridgeScheme::DriftImplicit ? "drift_implicit" : "explicit_clamped"},
                   {"bridge_seed", grid.bridge.seed},
                   {"cache", grid.cache_enabled},
                   {"max_mc_error", grid.max_mc_error ? json(*grid.max_mc_error) : json(nullptr)}};
  j["optimizer"] = {{"max_iterations", optimizer.nelder_mead.max_iterations},
                    {"tolerance", optimizer.nelder_mead.tolerance},
                    {"initial_step", optimizer.nelder_mead.initial_step},
                    {"starts", optimizer.starts}};
  j["params"] = params ? theta_json(*params) : json(nullptr);
  json risk_j = {{"delta", risk.spec.delta}, {"season_days", risk.spec.season_days}, {"n_sims", risk.n_sims},
                 {"dt", risk.dt}};
  if (const auto* t = std::get_if<TwoThreshold>(&risk.spec.definition)) {
    risk_j["definition"] = "two_threshold";
    risk_j["a_max"] = t->a_max;
    risk_j["a_min"] = t->a_min;
  } else {
    risk_j["definition"] = "single_threshold";
    risk_j["a"] = std::get<SingleThreshold>(risk.spec.definition).a;
  }
  risk_j["severity"] = risk.severity ? json{{"a", risk.severity->a}, {"delta", risk.severity->delta},
                                            {"blocks", risk.severity->n_blocks}}
                                     : json(nullptr);
  j["risk"] = risk_j;
  j["prediction"] = {{"start", prediction.start ? json(format_date(*prediction.start)) : json(nullptr)},
                     {"x0", prediction.x0 ? json(*prediction.x0) : json(nullptr)},
                     {"horizon_days", prediction.horizon_days},
                     {"n_sims", prediction.n_sims},
                     {"level", prediction.level},
                     {"dt", prediction.dt}};
  j["study"] = {{"theta0", theta_json(study.theta0)},
                {"sample_sizes", study.sample_sizes},
                {"replications", study.replications},
                {"dt", study.dt},
                {"fixed_beta", study.fixed_beta ? json(*study.fixed_beta) : json(nullptr)}};
  json traj = json::array();
  for (const auto& p : trajectories.params) traj.push_back(theta_json(p));
  j["trajectories"] = {{"params", traj},
                       {"days", trajectories.days},
                       {"dt", trajectories.dt},
                       {"stride", trajectories.stride},
                       {"x0", trajectories.x0}};
  j["seed"] = seed;
  j["workers"] = workers;
  j["out_dir"] = out_dir.string();
  return j;
}

void RunConfig::validate() const {
  season.validate();
  grid.validate();
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (optimizer.starts < 1) throw ConfigError("optimizer.starts must be at least 1");
  for (int y : train_years)
    if (std::find(test_years.begin(), test_years.end(), y) != test_years.end())
      throw ConfigError("year " + std::to_string(y) + " is in both train_years and test_years");
  if (anchor_levels.size() < 3) throw ConfigError("at least 3 anchor levels are needed");
  risk.spec.validate();
  if (risk.n_sims < 1) throw ConfigError("risk.n_sims must be at least 1");
  if (!(risk.dt > 0.0 && risk.dt <= 1.0)) throw ConfigError("risk.dt must lie in (0, 1]");
  if (params) params->validate();
  if (prediction.horizon_days < 1) throw ConfigError("prediction.horizon_days must be at least 1");
  if (!(prediction.level > 0.0 && prediction.level < 1.0)) throw ConfigError("prediction.level must lie in (0, 1)");
  study.validate();
  if (trajectories.days < 1 || trajectories.stride < 1) throw ConfigError("trajectories.days and stride must be >= 1");
}

SeasonSample build_train_sample(const StationDataset& ds, const RunConfig& cfg) {
  if (cfg.train_years.empty()) throw ConfigError("train_years is empty");
  return build_season_sample(ds, cfg.season, cfg.train_years);
}

}  // namespace ouheat
