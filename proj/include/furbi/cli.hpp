#pragma once

// Command line front end: `dependence`, `fit` and `reproduce`.
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "furbi/dependence.hpp"
#include "furbi/eval.hpp"
#include "furbi/experiments.hpp"
#include "furbi/io.hpp"
#include "furbi/models.hpp"

namespace furbi::cli {

using io::ConfigError;
using io::json;

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;
constexpr const char* kOutEnv = "FURBI_OUT_DIR";
constexpr int kManifestVersion = 1;

/// Command line values that override the config file.
struct Overrides {
  std::string config;
  std::string input;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<int> burn_in;
  int threads = 1;
};

namespace detail {

/// The run configuration embedded in a manifest, or the file itself.
inline json load_config_json(const std::string& path) {
  if (path.empty()) return json::object();
  json j = io::read_json_file(path);
  if (j.is_object() && j.contains("manifest_version")) {
    if (!j.contains("config")) throw ConfigError(path + ": manifest without a config");
    return j.at("config");
  }
  return j;
}

inline std::string resolve_out(const Overrides& ov, const std::string& from_config, const std::string& fallback) {
  if (!ov.out.empty()) return ov.out;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv(kOutEnv); env && *env) return (std::filesystem::path(env) / fallback).string();
  return (std::filesystem::path("furbi_out") / fallback).string();
}

inline void apply_mcmc(McmcConfig& m, const Overrides& ov) {
  if (ov.seed) m.seed = *ov.seed;
  if (ov.iters) {
    m.iters = *ov.iters;
    if (!ov.burn_in && m.burn_in >= m.iters) m.burn_in = m.iters / 2;
  }
  if (ov.burn_in) m.burn_in = *ov.burn_in;
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline json manifest(const std::string& command, const json& config, const Overrides& ov, const io::OutputDir& out) {
  json m;
  m["manifest_version"] = kManifestVersion;
  m["command"] = command;
  m["config"] = config;
  m["threads"] = ov.threads;
  m["outputs"] = out.written();
  return m;
}

inline void check_finite(const RunResult& r) {
  for (const auto& row : r.traces)
    for (double v : row)
      if (!std::isfinite(v)) throw std::domain_error("non-finite value in the sampler state");
}

inline std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t j) {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

inline void write_svg(io::OutputDir& out, const std::string& name, const std::string& svg, bool enabled) {
  if (enabled) out.open(name) << svg;
}

inline void write_xy(io::OutputDir& out, const std::string& name, const std::string& xname, const std::string& yname,
                     const std::vector<double>& x, const std::vector<double>& y) {
  auto f = out.open(name);
  io::write_csv(f, {xname, yname}, {x, y});
}

}  // namespace detail

// ---- dependence ---------------------------------------------------------------------------

inline json dependence_json(const io::RunConfig& rc) {
  const auto& spec = rc.model.spec;
  const auto& g0 = rc.model.g0;
  try {
    spec.validate();
    // Singular bivariate bases (rho0 = +-1) are valid for prior summaries.
    if (g0.family == BaseFamily::BivariateGaussian) {
      if (!(std::abs(g0.corr(0, 1)) <= 1.0)) throw std::invalid_argument("base.rho0 must lie in [-1, 1]");
    } else {
      g0.validate();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto closed = dependence_report(spec, g0);
  json j;
  j["closed_form"] = {{"beta", closed.beta},
                      {"gamma", closed.gamma},
                      {"rho0", closed.rho0},
                      {"corr_within", closed.corr_within},
                      {"corr_across", closed.corr_across},
                      {"method", closed.method == DependenceMethod::ClosedForm ? "closed_form" : "quadrature"}};
  const double bq = beta_numeric(spec), gq = gamma_numeric(spec);
  j["quadrature"] = {{"beta", bq}, {"gamma", gq}, {"corr_within", bq}, {"corr_across", gq * closed.rho0}};
  if (rc.mc_reps > 0) {
    Rng rng(rc.model.mcmc.seed);
    const auto mc = mc_dependence_oracle(spec, g0, rc.mc_atoms, rc.mc_reps, rng);
    json m = {{"beta", mc.beta}, {"gamma", mc.gamma}, {"corr_across", mc.corr_across}, {"replicates", rc.mc_reps}};
    if (mc.beta_stderr) m["beta_stderr"] = *mc.beta_stderr;
    if (mc.mc_stderr) m["gamma_stderr"] = *mc.mc_stderr;
    if (mc.across_stderr) m["corr_across_stderr"] = *mc.across_stderr;
    j["monte_carlo"] = m;
  } else {
    j["monte_carlo"] = nullptr;
  }
  if (rc.hdp_theta0 > 0.0) {
    const auto h = hdp_dependence(spec.theta, rc.hdp_theta0);
    j["hdp"] = {{"theta", spec.theta}, {"theta0", rc.hdp_theta0}, {"beta", h.beta}, {"gamma", h.gamma}};
  }
  return j;
}

inline int cmd_dependence(const Overrides& ov, std::ostream& out) {
  const json raw = detail::load_config_json(ov.config);
  io::RunConfig rc = io::parse_config(raw);
  if (ov.seed) rc.model.mcmc.seed = *ov.seed;
  const json report = dependence_json(rc);
  out << report.dump(2) << '\n';
  if (!ov.out.empty() || !rc.output_dir.empty()) {
    rc.output_dir = detail::resolve_out(ov, rc.output_dir, "dependence");
    io::OutputDir dir(rc.output_dir);
    dir.write_json("dependence.json", report);
    dir.write_json("manifest.json", detail::manifest("dependence", io::to_json(rc), ov, dir));
  }
  return kOk;
}

// ---- fit ----------------------------------------------------------------------------------

inline int cmd_fit(const Overrides& ov, std::ostream& out) {
  const json raw = detail::load_config_json(ov.config);
  io::RunConfig rc = io::parse_config(raw);
  if (!ov.input.empty()) rc.input = ov.input;
  if (rc.input.empty()) throw ConfigError("fit: no input file (use --input or data.input)");
  detail::apply_mcmc(rc.model.mcmc, ov);
  rc.output_dir = detail::resolve_out(ov, rc.output_dir, "fit");

  const bool missing = rc.model.model == ModelKind::MissingDataClustering;
  const io::Table table = io::read_table(rc.input);
  io::LoadedData loaded = io::load_dataset(table, rc.input, missing);
  Dataset& d = loaded.data;
  if (rc.standardize) standardize(d);
  ModelConfig& c = rc.model;
  try {
    validate(c, d);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  RunOptions ro;
  ro.threads = ov.threads;
  ro.density_every = rc.density_every;
  const int per_chain = (c.mcmc.iters - c.mcmc.burn_in + c.mcmc.thin - 1) / c.mcmc.thin;
  ro.partition_every = std::max(1, per_chain * c.mcmc.chains / rc.kept_partitions);
  const auto grid = linspace(rc.grid_lo, rc.grid_hi, rc.grid_points);
  std::vector<double> shift(d.num_groups(), 0.0), scale(d.num_groups(), 1.0);
  if (d.univariate()) {
    ro.grids.resize(d.num_groups());
    for (int g = 0; g < d.num_groups(); ++g) {
      const int j = d.group_coords[g][0];
      if (d.transform.applied) shift[g] = d.transform.mean[j], scale[g] = d.transform.sd[j];
      for (double x : grid) ro.grids[g].push_back((x - shift[g]) / scale[g]);
    }
  }
  const RunResult r = run_chains(c, d, ro);
  detail::check_finite(r);

  io::OutputDir dir(rc.output_dir);
  {
    auto f = dir.open("trace.csv");
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < r.trace_names.size(); ++j) cols.push_back(detail::column(r.traces, j));
    io::write_csv(f, r.trace_names, cols);
  }
  // Labels are reported per input row.
  auto to_rows = [&](const std::vector<int>& p) {
    std::vector<int> q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) q[d.row[i]] = p[i];
    return q;
  };
  {
    auto f = dir.open("partitions.csv");
    f << "draw";
    for (int i = 0; i < d.num_obs(); ++i) f << ",row" << i + 1;
    f << '\n';
    for (std::size_t t = 0; t < r.partitions.size(); ++t) {
      f << t;
      for (int v : to_rows(r.partitions[t])) f << ',' << v;
      f << '\n';
    }
  }
  json metrics;
  metrics["model"] = to_string(c.model);
  metrics["observations"] = d.num_obs();
  metrics["groups"] = d.num_groups();
  metrics["group_sizes"] = d.group_sizes();
  metrics["stored_draws"] = r.traces.size();
  const auto k = r.trace("k");
  metrics["mean_clusters"] = furbi::detail::mean(k);
  metrics["ess_clusters"] = ess(k).ess;
  json means;
  for (std::size_t j = 1; j < r.trace_names.size(); ++j) means[r.trace_names[j]] = furbi::detail::mean(detail::column(r.traces, j));
  metrics["posterior_means"] = means;
  {
    const auto cpo = cpo_report(r.log_pred);
    metrics["alcpo"] = cpo.alcpo;
    metrics["mlcpo"] = cpo.mlcpo;
    metrics["cpo_excluded"] = cpo.excluded.size();
    auto f = dir.open("log_cpo.csv");
    f << "row,group,log_cpo\n";
    std::vector<std::pair<int, int>> order;
    for (int i = 0; i < d.num_obs(); ++i) order.push_back({d.row[i], i});
    std::sort(order.begin(), order.end());
    for (auto [row, i] : order) f << row + 1 << ',' << d.group[i] + 1 << ',' << cpo.log_cpo[i] << '\n';
  }
  const auto estimate = to_rows(vi_point_estimate(r.partitions));
  metrics["point_estimate_clusters"] = num_blocks(estimate);
  std::vector<int> row_group(d.num_obs());
  for (int i = 0; i < d.num_obs(); ++i) row_group[d.row[i]] = d.group[i];
  {
    auto f = dir.open("estimate.csv");
    f << "row,group,cluster" << (loaded.truth.empty() ? "" : ",truth") << '\n';
    for (int i = 0; i < d.num_obs(); ++i) {
      f << i + 1 << ',' << row_group[i] + 1 << ',' << estimate[i];
      if (!loaded.truth.empty()) f << ',' << loaded.truth[i];
      f << '\n';
    }
  }
  if (!loaded.truth.empty()) {
    metrics["rand_index"] = rand_index(estimate, loaded.truth);
    double s = 0.0;
    for (const auto& p : r.partitions) s += rand_index(to_rows(p), loaded.truth);
    metrics["mean_rand_index"] = s / r.partitions.size();
  }
  if (d.transform.applied) metrics["standardization"] = {{"mean", d.transform.mean}, {"sd", d.transform.sd}};
  {
    auto f = dir.open("k_trace.csv");
    std::vector<double> it(k.size());
    for (std::size_t t = 0; t < k.size(); ++t) it[t] = static_cast<double>(t);
    io::write_csv(f, {"draw", "k"}, {it, k});
  }
  std::vector<io::Series> series;
  for (std::size_t g = 0; g < r.densities.size(); ++g) {
    const auto& dg = r.densities[g];
    auto mean = dg.mean(), lo = dg.quantile(0.05), hi = dg.quantile(0.95);
    for (std::size_t i = 0; i < grid.size(); ++i) mean[i] /= scale[g], lo[i] /= scale[g], hi[i] /= scale[g];
    const std::string tag = "group" + std::to_string(g + 1);
    auto f = dir.open("density_" + tag + ".csv");
    io::write_csv(f, {"grid", "mean", "q05", "q95"}, {grid, mean, lo, hi});
    detail::write_xy(dir, "plot_density_" + tag + ".csv", "x", "density", grid, mean);
    series.push_back({tag, grid, mean});
  }
  if (!series.empty()) detail::write_svg(dir, "density.svg", io::svg_lines("Posterior mean densities", series, "x", "density"), true);
  dir.write_json("metrics.json", metrics);
  dir.write_json("manifest.json", detail::manifest("fit", io::to_json(rc), ov, dir));
  out << "fit: " << r.traces.size() << " draws, mean clusters " << furbi::detail::mean(k) << ", outputs in " << rc.output_dir
      << '\n';
  return kOk;
}

// ---- reproduce ----------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"sim-density", "sim-threegroup", "finance-synthetic", "missing-clustering"};
  return names;
}

/// Settings of a scaled-down experiment.
struct ReproduceConfig {
  std::string name;
  int reps = 10;
  std::vector<double> v_means{-16.0, -10.0, 0.0, 10.0, 16.0};
  std::vector<double> x_values{-10.0, 0.0, 10.0};
  std::string mechanism = "mcar";
  int n = 300;
  std::string data;   ///< finance-synthetic: CSV input; empty generates the mirrored pair
  double sign = -1.0;  ///< finance-synthetic generator
  std::uint64_t data_seed = 1;
  McmcConfig mcmc;
  std::string output_dir;
  bool svg = true;
};

inline ReproduceConfig default_reproduce(const std::string& name) {
  ReproduceConfig r;
  r.name = name;
  if (name == "sim-density" || name == "sim-threegroup") r.mcmc.iters = 2000, r.mcmc.burn_in = 1000;
  if (name == "sim-threegroup") r.reps = 3;
  if (name == "finance-synthetic") r.mcmc.iters = 6000, r.mcmc.burn_in = 2000;
  if (name == "missing-clustering") r.mcmc.iters = 5000, r.mcmc.burn_in = 2500;
  return r;
}

inline ReproduceConfig parse_reproduce(const std::string& name, const json& j) {
  if (std::find(experiment_names().begin(), experiment_names().end(), name) == experiment_names().end()) {
    std::string list;
    for (const auto& n : experiment_names()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown experiment '" + name + "'; available: " + list);
  }
  ReproduceConfig r = default_reproduce(name);
  io::check_keys(j, "config", {"reproduce", "mcmc", "output"});
  if (j.contains("reproduce")) {
    const auto& s = j.at("reproduce");
    io::check_keys(s, "reproduce", {"name", "reps", "v_means", "x_values", "mechanism", "n", "data", "sign", "data_seed"});
    if (s.contains("name") && s.at("name") != name) throw ConfigError("reproduce.name differs from the requested experiment");
    r.reps = io::get_or<int>(s, "reps", r.reps, "reproduce");
    r.v_means = io::get_or<std::vector<double>>(s, "v_means", r.v_means, "reproduce");
    r.x_values = io::get_or<std::vector<double>>(s, "x_values", r.x_values, "reproduce");
    r.mechanism = io::get_or<std::string>(s, "mechanism", r.mechanism, "reproduce");
    r.n = io::get_or<int>(s, "n", r.n, "reproduce");
    r.data = io::get_or<std::string>(s, "data", r.data, "reproduce");
    r.sign = io::get_or<double>(s, "sign", r.sign, "reproduce");
    r.data_seed = io::get_or<std::uint64_t>(s, "data_seed", r.data_seed, "reproduce");
  }
  if (j.contains("mcmc")) {
    const auto& m = j.at("mcmc");
    io::check_keys(m, "mcmc", {"iters", "burn_in", "seed"});
    r.mcmc.iters = io::get_or<int>(m, "iters", r.mcmc.iters, "mcmc");
    r.mcmc.burn_in = io::get_or<int>(m, "burn_in", r.mcmc.burn_in, "mcmc");
    r.mcmc.seed = io::get_or<std::uint64_t>(m, "seed", r.mcmc.seed, "mcmc");
  }
  if (j.contains("output")) {
    io::check_keys(j.at("output"), "output", {"dir", "svg"});
    r.output_dir = io::get_or<std::string>(j.at("output"), "dir", "", "output");
    r.svg = io::get_or<bool>(j.at("output"), "svg", true, "output");
  }
  if (r.reps < 1 || r.n < 1) throw ConfigError("reproduce: reps and n must be positive");
  if (r.mechanism != "mcar" && r.mechanism != "mnar") throw ConfigError("reproduce.mechanism: mcar or mnar");
  if (r.sign != 1.0 && r.sign != -1.0) throw ConfigError("reproduce.sign: 1 or -1");
  return r;
}

inline json to_json(const ReproduceConfig& r) {
  json j;
  j["reproduce"] = {{"name", r.name},         {"reps", r.reps}, {"v_means", r.v_means}, {"x_values", r.x_values},
                    {"mechanism", r.mechanism}, {"n", r.n},       {"data", r.data},       {"sign", r.sign},
                    {"data_seed", r.data_seed}};
  j["mcmc"] = {{"iters", r.mcmc.iters}, {"burn_in", r.mcmc.burn_in}, {"seed", r.mcmc.seed}};
  j["output"] = {{"dir", r.output_dir}, {"svg", r.svg}};
  return j;
}

namespace detail {

inline std::string num_tag(double v) {
  std::ostringstream o;
  o << (v < 0 ? "m" : "") << std::abs(v);
  return o.str();
}

inline json run_sim_density(const ReproduceConfig& rc, int threads, io::OutputDir& dir) {
  SimDensityOptions o;
  o.v_means = rc.v_means;
  o.reps = rc.reps;
  o.iters = rc.mcmc.iters;
  o.burn_in = rc.mcmc.burn_in;
  o.seed = rc.mcmc.seed;
  o.threads = threads;
  const auto res = sim_density(o);
  const auto& models = comparison_models();
  {
    auto f = dir.open("miae.csv");
    f << "v_mean";
    for (const auto& m : models) f << ',' << m;
    f << ",rho0_mean\n";
    for (const auto& row : res.rows) {
      f << row.v_mean;
      for (const auto& m : models) f << ',' << row.median_miae.at(m);
      f << ',' << row.rho0_mean << '\n';
    }
  }
  {
    auto f = dir.open("miae_replicates.csv");
    f << "v_mean,replicate,model,miae\n";
    for (const auto& row : res.rows)
      for (const auto& m : models)
        for (std::size_t k = 0; k < row.miae.at(m).size(); ++k) f << row.v_mean << ',' << k << ',' << m << ',' << row.miae.at(m)[k] << '\n';
  }
  std::vector<double> truth;
  for (double x : res.grid) truth.push_back(furbi::detail::normal_pdf(x, 10.0, 1.0));
  write_xy(dir, "plot_density_truth.csv", "x", "density", res.grid, truth);
  json rows = json::array();
  for (const auto& row : res.rows) {
    std::vector<io::Series> series{{"truth", res.grid, truth}};
    for (const auto& m : models) {
      const std::string tag = "plot_density_v" + num_tag(row.v_mean) + "_" + m + ".csv";
      write_xy(dir, tag, "x", "density", res.grid, row.density.at(m));
      series.push_back({m, res.grid, row.density.at(m)});
    }
    write_svg(dir, "density_v" + num_tag(row.v_mean) + ".svg",
              io::svg_lines("First sample density, V mean " + num_tag(row.v_mean), series, "x", "density"), rc.svg);
    json r = {{"v_mean", row.v_mean}, {"median_miae", row.median_miae}, {"rho0_mean", row.rho0_mean}};
    std::vector<std::string> order = models;
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) { return row.median_miae.at(a) < row.median_miae.at(b); });
    r["ordering"] = order;
    rows.push_back(r);
  }
  std::vector<io::Series> miae_series;
  for (const auto& m : models) {
    io::Series s{m, {}, {}};
    for (const auto& row : res.rows) s.x.push_back(row.v_mean), s.y.push_back(row.median_miae.at(m));
    write_xy(dir, "plot_miae_" + m + ".csv", "v_mean", "median_miae", s.x, s.y);
    miae_series.push_back(std::move(s));
  }
  write_svg(dir, "miae.svg", io::svg_lines("Median MIAE", miae_series, "V mean", "MIAE"), rc.svg);
  return {{"rows", rows}};
}

inline json run_sim_threegroup(const ReproduceConfig& rc, io::OutputDir& dir) {
  ThreeGroupOptions o;
  o.x_values = rc.x_values;
  o.reps = rc.reps;
  o.iters = rc.mcmc.iters;
  o.burn_in = rc.mcmc.burn_in;
  o.seed = rc.mcmc.seed;
  const auto rows = sim_threegroup(o);
  std::vector<double> x, r12, r13, r23;
  for (const auto& r : rows) x.push_back(r.x), r12.push_back(r.rho12), r13.push_back(r.rho13), r23.push_back(r.rho23);
  {
    auto f = dir.open("rho.csv");
    io::write_csv(f, {"x", "rho12", "rho13", "rho23"}, {x, r12, r13, r23});
  }
  write_xy(dir, "plot_rho12.csv", "x", "rho12", x, r12);
  write_xy(dir, "plot_rho13.csv", "x", "rho13", x, r13);
  write_xy(dir, "plot_rho23.csv", "x", "rho23", x, r23);
  write_svg(dir, "rho.svg", io::svg_lines("Posterior median correlations", {{"rho12", x, r12}, {"rho13", x, r13}, {"rho23", x, r23}}, "x", "median"),
            rc.svg);
  json out = json::array();
  for (const auto& r : rows) out.push_back({{"x", r.x}, {"rho12", r.rho12}, {"rho13", r.rho13}, {"rho23", r.rho23}});
  return {{"rows", out}};
}

inline json run_finance(ReproduceConfig& rc, int threads, io::OutputDir& dir) {
  Dataset d;
  if (!rc.data.empty()) {
    d = io::load_dataset(io::read_table(rc.data), rc.data, false).data;
  } else {
    Rng rng(rc.data_seed);
    d = generate_mirrored(rng, 49, 55, rc.sign);
  }
  if (d.num_groups() != 2) throw ConfigError("finance-synthetic: the data must hold exactly two groups");
  {
    auto f = dir.open("data.csv");
    f << "group,value\n" << std::setprecision(17);
    for (int i = 0; i < d.num_obs(); ++i) f << d.group[i] + 1 << ',' << d.values[i][0] << '\n';
  }
  FinanceOptions o;
  o.iters = rc.mcmc.iters;
  o.burn_in = rc.mcmc.burn_in;
  o.seed = rc.mcmc.seed;
  o.threads = threads;
  const auto res = finance_synthetic(d, o);
  json rows = json::array();
  {
    auto f = dir.open("cpo.csv");
    f << "model,alcpo,mlcpo,excluded\n";
    for (const auto& r : res.rows) {
      f << r.model << ',' << r.cpo.alcpo << ',' << r.cpo.mlcpo << ',' << r.cpo.excluded.size() << '\n';
      json jr = {{"model", r.model}, {"alcpo", r.cpo.alcpo}, {"mlcpo", r.cpo.mlcpo}, {"excluded", r.cpo.excluded.size()}};
      if (r.model == "furbi") jr["rho0_mean"] = r.rho0_mean, jr["z_mean"] = r.z_mean;
      rows.push_back(jr);
    }
  }
  for (int g = 0; g < 2; ++g) {
    std::vector<io::Series> series;
    for (const auto& [m, dens] : res.density) {
      write_xy(dir, "plot_density_group" + std::to_string(g + 1) + "_" + m + ".csv", "x", "density", res.grid, dens[g]);
      series.push_back({m, res.grid, dens[g]});
    }
    write_svg(dir, "density_group" + std::to_string(g + 1) + ".svg",
              io::svg_lines("Standardized sample " + std::to_string(g + 1), series, "x", "density"), rc.svg);
  }
  return {{"rows", rows}, {"observations", d.num_obs()}};
}

inline json run_missing(const ReproduceConfig& rc, io::OutputDir& dir) {
  MissingOptions o;
  o.scenario.n = rc.n;
  o.scenario.mechanism = rc.mechanism == "mnar" ? MissingMechanism::MNAR : MissingMechanism::MCAR;
  o.iters = rc.mcmc.iters;
  o.burn_in = rc.mcmc.burn_in;
  o.seed = rc.mcmc.seed;
  Rng rng(rc.data_seed);
  const auto md = generate_missing(rng, o.scenario);
  const auto r = missing_clustering(md, o);
  {
    auto f = dir.open("data.csv");
    f << "x1,x2,x3,truth\n" << std::setprecision(17);
    for (int i = 0; i < md.observed.rows(); ++i) {
      for (int j = 0; j < md.observed.cols(); ++j) {
        if (!std::isnan(md.observed(i, j))) f << md.observed(i, j);
        f << ',';
      }
      f << md.truth[i] << '\n';
    }
  }
  {
    auto f = dir.open("estimate.csv");
    f << "row,cluster,truth\n";
    for (std::size_t i = 0; i < r.estimate.size(); ++i) f << i + 1 << ',' << r.estimate[i] << ',' << r.truth[i] << '\n';
  }
  std::vector<double> it(r.k_trace.size());
  for (std::size_t t = 0; t < it.size(); ++t) it[t] = static_cast<double>(t);
  write_xy(dir, "plot_k_trace.csv", "draw", "k", it, r.k_trace);
  write_svg(dir, "k_trace.svg", io::svg_lines("Number of clusters", {{"k", it, r.k_trace}}, "draw", "k"), rc.svg);
  {
    auto f = dir.open("summary.csv");
    f << "mechanism,missing_rate,groups,mean_k,rand_index,mean_rand_index\n"
      << rc.mechanism << ',' << r.missing_rate << ',' << r.groups << ',' << r.mean_k << ',' << r.rand_index << ','
      << r.mean_rand_index << '\n';
  }
  return {{"mechanism", rc.mechanism}, {"missing_rate", r.missing_rate}, {"groups", r.groups},
          {"mean_k", r.mean_k},       {"rand_index", r.rand_index},     {"mean_rand_index", r.mean_rand_index},
          {"point_estimate_clusters", num_blocks(r.estimate)}};
}

/// Sizes of the reference runs these scaled experiments stand in for.
inline json full_scale(const std::string& name) {
  if (name == "sim-density") return {{"replicates", 50}};
  if (name == "finance-synthetic") return {{"iters", 50000}, {"burn_in", 10000}, {"observations", 104}};
  if (name == "missing-clustering") return {{"iters", 25000}, {"burn_in", 12500}, {"n", 1000}};
  return json::object();
}

}  // namespace detail

inline int cmd_reproduce(const std::string& name, const Overrides& ov, std::ostream& out) {
  ReproduceConfig rc = parse_reproduce(name, detail::load_config_json(ov.config));
  detail::apply_mcmc(rc.mcmc, ov);
  rc.output_dir = detail::resolve_out(ov, rc.output_dir, name);
  io::OutputDir dir(rc.output_dir);
  json result;
  if (name == "sim-density") result = detail::run_sim_density(rc, ov.threads, dir);
  else if (name == "sim-threegroup") result = detail::run_sim_threegroup(rc, dir);
  else if (name == "finance-synthetic") result = detail::run_finance(rc, ov.threads, dir);
  else result = detail::run_missing(rc, dir);
  dir.write_json("metrics.json", result);
  json m = detail::manifest("reproduce", to_json(rc), ov, dir);
  m["scale"] = {{"this_run", {{"iters", rc.mcmc.iters}, {"burn_in", rc.mcmc.burn_in}, {"replicates", rc.reps}, {"n", rc.n}}},
                {"reference", detail::full_scale(name)}};
  dir.write_json("manifest.json", m);
  out << result.dump(2) << '\n';
  return kOk;
}

// ---- entry point --------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Dependent random probability measures with full-range borrowing of information"};
  app.require_subcommand(1);
  Overrides ov;
  std::string experiment;
  auto common = [&](CLI::App* s, bool mcmc) {
    s->add_option("--config", ov.config, "JSON configuration (or a manifest from an earlier run)");
    s->add_option("--out", ov.out, std::string("Output directory (default: $") + kOutEnv + "/<command>)");
    s->add_option("--seed", ov.seed, "Random seed");
    if (!mcmc) return;
    s->add_option("--iters", ov.iters, "MCMC iterations")->check(CLI::PositiveNumber);
    s->add_option("--burn-in", ov.burn_in, "Burn-in iterations")->check(CLI::NonNegativeNumber);
    s->add_option("--threads", ov.threads, "Chains run in parallel")->check(CLI::PositiveNumber);
  };
  auto* dep = app.add_subcommand("dependence", "Prior correlations of a Levy intensity and base measure");
  common(dep, false);
  auto* fit = app.add_subcommand("fit", "Posterior inference on a CSV dataset");
  common(fit, true);
  fit->add_option("--input", ov.input, "CSV data");
  auto* rep = app.add_subcommand("reproduce", "Run a scaled-down experiment");
  common(rep, true);
  rep->add_option("name", experiment, "sim-density | sim-threegroup | finance-synthetic | missing-clustering")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  try {
    if (*dep) return cmd_dependence(ov, out);
    if (*fit) return cmd_fit(ov, out);
    return cmd_reproduce(experiment, ov, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"furbi"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace furbi::cli
