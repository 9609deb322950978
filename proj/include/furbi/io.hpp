#pragma once

// File formats: CSV data input, JSON run configuration, CSV/JSON/SVG outputs.

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "furbi/models.hpp"

namespace furbi::io {

using json = nlohmann::ordered_json;

/// Usage or configuration problem (exit code 2).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// ---- CSV input --------------------------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line;  ///< source line of each row (1-based)

  int column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    return -1;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted) {
      if (c == '"' && i + 1 < s.size() && s[i + 1] == '"') cur += '"', ++i;
      else if (c == '"') quoted = false;
      else cur += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto a = f.find_first_not_of(" \t");
    const auto b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? "" : f.substr(a, b - a + 1);
  }
  return out;
}

inline Table read_table(std::istream& in, const std::string& source) {
  Table t;
  std::string s;
  int line = 0;
  while (std::getline(in, s)) {
    ++line;
    if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto f = split_csv_line(s);
    if (t.header.empty()) {
      t.header = f;
      std::set<std::string> seen;
      for (const auto& h : t.header)
        if (h.empty() || !seen.insert(h).second)
          throw ConfigError(source + ":" + std::to_string(line) + ": empty or repeated column name");
      continue;
    }
    if (f.size() != t.header.size())
      throw ConfigError(source + ":" + std::to_string(line) + ": expected " + std::to_string(t.header.size()) +
                        " fields, found " + std::to_string(f.size()));
    t.rows.push_back(std::move(f));
    t.line.push_back(line);
  }
  if (t.header.empty()) throw ConfigError(source + ": empty file");
  if (t.rows.empty()) throw ConfigError(source + ": no data rows");
  return t;
}

inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_table(in, path);
}

inline double parse_number(const std::string& s, const std::string& where) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + s + "' is not a number");
  }
  if (pos != s.size() || !std::isfinite(v)) throw ConfigError(where + ": '" + s + "' is not a finite number");
  return v;
}

struct LoadedData {
  Dataset data;
  std::vector<int> truth;  ///< per original row, from an optional `truth` column
  std::vector<std::string> group_labels;
};

/// Multi-sample univariate data: a `group` column and one value column.
/// Groups are numbered in order of first appearance.
/// Missing-entry data (`missing_patterns`): every column except `truth`
/// is a coordinate and empty cells are missing.
inline LoadedData load_dataset(const Table& t, const std::string& source, bool missing_patterns) {
  LoadedData out;
  const int truth_col = t.column("truth");
  if (truth_col >= 0)
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      out.truth.push_back(static_cast<int>(parse_number(t.rows[r][truth_col], source + ":" + std::to_string(t.line[r]))));
  if (missing_patterns) {
    std::vector<int> cols;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < t.header.size(); ++j)
      if (static_cast<int>(j) != truth_col && t.header[j] != "group") cols.push_back(static_cast<int>(j)), names.push_back(t.header[j]);
    Eigen::MatrixXd m(t.rows.size(), cols.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      for (std::size_t k = 0; k < cols.size(); ++k)
        m(r, k) = parse_number(t.rows[r][cols[k]], source + ":" + std::to_string(t.line[r]));
    try {
      out.data = missing_pattern_split(m, names);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source + ": " + e.what());
    }
    return out;
  }
  const int gcol = t.column("group");
  std::vector<int> vcols;
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (static_cast<int>(j) != gcol && static_cast<int>(j) != truth_col) vcols.push_back(static_cast<int>(j));
  if (vcols.size() != 1) throw ConfigError(source + ": expected one value column besides 'group' and 'truth'");
  std::vector<std::vector<double>> samples;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = source + ":" + std::to_string(t.line[r]);
    const std::string label = gcol >= 0 ? t.rows[r][gcol] : "1";
    if (label.empty()) throw ConfigError(where + ": empty group label");
    std::size_t g = std::find(out.group_labels.begin(), out.group_labels.end(), label) - out.group_labels.begin();
    if (g == out.group_labels.size()) out.group_labels.push_back(label), samples.emplace_back();
    const double v = parse_number(t.rows[r][vcols[0]], where);
    if (std::isnan(v)) throw ConfigError(where + ": missing value (only the missing-data model accepts empty cells)");
    samples[g].push_back(v);
  }
  out.data = dataset_from_samples(samples);
  // dataset_from_samples orders observations by group; record the source rows.
  std::vector<int> rows;
  for (std::size_t g = 0; g < samples.size(); ++g)
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      if ((gcol >= 0 ? t.rows[r][gcol] : "1") == out.group_labels[g]) rows.push_back(static_cast<int>(r));
  out.data.row = rows;
  out.data.columns.assign(samples.size(), t.header[vcols[0]]);
  return out;
}

// ---- configuration ----------------------------------------------------------------------

/// Throws when `j` has a key outside `allowed`.
inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

inline Eigen::VectorXd vec_or(const json& j, const char* key, Eigen::VectorXd fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto v = get_or<std::vector<double>>(j, key, {}, where);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Everything a run needs besides the data.
struct RunConfig {
  ModelConfig model;
  bool standardize = false;
  double grid_lo = -10.0, grid_hi = 10.0;
  int grid_points = 201;
  int density_every = 1;
  int kept_partitions = 1000;
  std::string input;
  std::string output_dir;
  int mc_reps = 0;  ///< dependence: Monte Carlo replicates (0: none)
  int mc_atoms = 2000;
  double hdp_theta0 = 0.0;  ///< dependence: > 0 adds the hierarchical process report
};

inline LevySpec parse_levy(const json& j) {
  check_keys(j, "levy", {"family", "theta", "z"});
  LevySpec s;
  try {
    s.family = levy_family_from_string(get_or<std::string>(j, "family", "gamma", "levy"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("levy.family: ") + e.what());
  }
  s.theta = get_or<double>(j, "theta", 1.0, "levy");
  s.z = get_or<double>(j, "z", 0.0, "levy");
  return s;
}

inline BaseMeasure parse_base(const json& j) {
  check_keys(j, "base", {"family", "dim", "mean", "scale", "rho0", "corr", "nig"});
  const auto fam = get_or<std::string>(j, "family", "bivariate_gaussian", "base");
  if (fam == "bivariate_gaussian") {
    const auto mean = get_or<double>(j, "mean", 0.0, "base");
    const auto sd = get_or<double>(j, "scale", 1.0, "base");
    return bivariate_gaussian(mean, sd, get_or<double>(j, "rho0", 0.0, "base"));
  }
  if (fam == "diagonal")
    return diagonal_degenerate(get_or<double>(j, "mean", 0.0, "base"), get_or<double>(j, "scale", 1.0, "base"));
  if (fam == "multivariate_gaussian" || fam == "single_group_gaussian") {
    const int d = get_or<int>(j, "dim", 0, "base");
    Eigen::VectorXd mean = vec_or(j, "mean", Eigen::VectorXd::Zero(d), "base");
    const int dim = static_cast<int>(mean.size());
    if (dim < 1) throw ConfigError("base: need 'dim' or 'mean'");
    Eigen::VectorXd scale = vec_or(j, "scale", Eigen::VectorXd::Ones(dim), "base");
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(dim, dim);
    if (j.contains("corr")) {
      const auto rows = get_or<std::vector<std::vector<double>>>(j, "corr", {}, "base");
      if (static_cast<int>(rows.size()) != dim) throw ConfigError("base.corr: wrong shape");
      for (int a = 0; a < dim; ++a) {
        if (static_cast<int>(rows[a].size()) != dim) throw ConfigError("base.corr: wrong shape");
        for (int b = 0; b < dim; ++b) corr(a, b) = rows[a][b];
      }
    }
    return fam == "single_group_gaussian" ? single_group_gaussian(mean, scale, corr)
                                          : multivariate_gaussian_corr(mean, scale, corr);
  }
  if (fam == "normal_inverse_gamma") {
    NigParams p;
    if (j.contains("nig")) {
      const auto& n = j.at("nig");
      check_keys(n, "base.nig", {"lambda1", "lambda2", "alpha1", "beta1", "alpha2", "beta2"});
      p.lambda1 = get_or<double>(n, "lambda1", p.lambda1, "base.nig");
      p.lambda2 = get_or<double>(n, "lambda2", p.lambda2, "base.nig");
      p.alpha1 = get_or<double>(n, "alpha1", p.alpha1, "base.nig");
      p.beta1 = get_or<double>(n, "beta1", p.beta1, "base.nig");
      p.alpha2 = get_or<double>(n, "alpha2", p.alpha2, "base.nig");
      p.beta2 = get_or<double>(n, "beta2", p.beta2, "base.nig");
    }
    const Eigen::VectorXd mean = vec_or(j, "mean", Eigen::Vector2d::Zero(), "base");
    if (mean.size() != 2) throw ConfigError("base.mean: the Normal-InverseGamma base needs two means");
    return normal_inv_gamma_pair(mean[0], mean[1], get_or<double>(j, "rho0", 0.0, "base"), p);
  }
  throw ConfigError("base.family: unknown family '" + fam + "'");
}

inline RunConfig parse_config(const json& j) {
  check_keys(j, "config", {"model", "levy", "base", "kernel", "priors", "mcmc", "sampler", "data", "output", "dependence"});
  RunConfig rc;
  auto& c = rc.model;
  try {
    c.model = model_kind_from_string(get_or<std::string>(j, "model", "two_sample_gaussian", "config"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (j.contains("levy")) c.spec = parse_levy(j.at("levy"));
  if (j.contains("base")) c.g0 = parse_base(j.at("base"));
  c.kernel = c.g0.family == BaseFamily::NormalInvGammaPair ? KernelKind::GaussianNIG : KernelKind::Gaussian;
  c.kernel_var = Eigen::VectorXd::Ones(c.g0.latent_dim());
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    check_keys(k, "kernel", {"variance"});
    if (k.contains("variance")) {
      if (k.at("variance").is_number())
        c.kernel_var = Eigen::VectorXd::Constant(c.g0.latent_dim(), k.at("variance").get<double>());
      else
        c.kernel_var = vec_or(k, "variance", c.kernel_var, "kernel");
    }
  }
  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    check_keys(p, "priors", {"theta", "z", "corr", "kernel_variance"});
    if (p.contains("theta") && !p.at("theta").is_null()) {
      check_keys(p.at("theta"), "priors.theta", {"shape", "rate"});
      c.hyper.theta = {false, get_or<double>(p.at("theta"), "shape", 1.0, "priors.theta"),
                       get_or<double>(p.at("theta"), "rate", 1.0, "priors.theta")};
    }
    c.hyper.z.fixed = get_or<std::string>(p, "z", "fixed", "priors") != "uniform";
    c.hyper.corr.fixed = get_or<std::string>(p, "corr", "fixed", "priors") != "uniform";
    if (p.contains("kernel_variance") && !p.at("kernel_variance").is_null()) {
      const auto& v = p.at("kernel_variance");
      check_keys(v, "priors.kernel_variance", {"kind", "shape", "rate"});
      const auto kind = get_or<std::string>(v, "kind", "gamma", "priors.kernel_variance");
      if (kind != "gamma" && kind != "inverse_gamma") throw ConfigError("priors.kernel_variance.kind: gamma or inverse_gamma");
      c.hyper.kernel_var = {kind == "gamma" ? VariancePrior::Kind::Gamma : VariancePrior::Kind::InvGamma,
                            get_or<double>(v, "shape", 3.0, "priors.kernel_variance"),
                            get_or<double>(v, "rate", 3.0, "priors.kernel_variance")};
    }
  }
  if (j.contains("mcmc")) {
    const auto& m = j.at("mcmc");
    check_keys(m, "mcmc", {"iters", "burn_in", "thin", "seed", "chains", "u_steps", "exact_u", "adapt"});
    c.mcmc.iters = get_or<int>(m, "iters", c.mcmc.iters, "mcmc");
    c.mcmc.burn_in = get_or<int>(m, "burn_in", c.mcmc.burn_in, "mcmc");
    c.mcmc.thin = get_or<int>(m, "thin", c.mcmc.thin, "mcmc");
    c.mcmc.seed = get_or<std::uint64_t>(m, "seed", c.mcmc.seed, "mcmc");
    c.mcmc.chains = get_or<int>(m, "chains", c.mcmc.chains, "mcmc");
    c.mcmc.u_steps = get_or<int>(m, "u_steps", c.mcmc.u_steps, "mcmc");
    c.mcmc.exact_u = get_or<bool>(m, "exact_u", c.mcmc.exact_u, "mcmc");
    c.mcmc.adapt = get_or<bool>(m, "adapt", c.mcmc.adapt, "mcmc");
  }
  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    check_keys(s, "sampler", {"kind", "truncation"});
    const auto kind = get_or<std::string>(s, "kind", "marginal", "sampler");
    if (kind != "marginal" && kind != "blocked") throw ConfigError("sampler.kind: marginal or blocked");
    c.sampler = kind == "blocked" ? SamplerKind::Blocked : SamplerKind::Marginal;
    c.truncation = get_or<int>(s, "truncation", c.truncation, "sampler");
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d, "data", {"input", "standardize", "grid", "density_every", "kept_partitions"});
    rc.input = get_or<std::string>(d, "input", "", "data");
    rc.standardize = get_or<bool>(d, "standardize", false, "data");
    rc.density_every = get_or<int>(d, "density_every", 1, "data");
    rc.kept_partitions = get_or<int>(d, "kept_partitions", 1000, "data");
    if (d.contains("grid")) {
      const auto& g = d.at("grid");
      check_keys(g, "data.grid", {"lo", "hi", "points"});
      rc.grid_lo = get_or<double>(g, "lo", rc.grid_lo, "data.grid");
      rc.grid_hi = get_or<double>(g, "hi", rc.grid_hi, "data.grid");
      rc.grid_points = get_or<int>(g, "points", rc.grid_points, "data.grid");
      if (!(rc.grid_hi > rc.grid_lo) || rc.grid_points < 2) throw ConfigError("data.grid: need lo < hi and points >= 2");
    }
    if (rc.density_every < 1 || rc.kept_partitions < 1) throw ConfigError("data: density_every and kept_partitions must be positive");
  }
  if (j.contains("output")) {
    check_keys(j.at("output"), "output", {"dir"});
    rc.output_dir = get_or<std::string>(j.at("output"), "dir", "", "output");
  }
  if (j.contains("dependence")) {
    const auto& d = j.at("dependence");
    check_keys(d, "dependence", {"mc_reps", "mc_atoms", "hdp_theta0"});
    rc.mc_reps = get_or<int>(d, "mc_reps", 0, "dependence");
    rc.mc_atoms = get_or<int>(d, "mc_atoms", 2000, "dependence");
    rc.hdp_theta0 = get_or<double>(d, "hdp_theta0", 0.0, "dependence");
  }
  return rc;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

/// The fully resolved configuration, in the input schema.
inline json to_json(const RunConfig& rc) {
  const auto& c = rc.model;
  json j;
  j["model"] = to_string(c.model);
  j["levy"] = {{"family", to_string(c.spec.family)}, {"theta", c.spec.theta}, {"z", c.spec.z}};
  json b;
  switch (c.g0.family) {
    case BaseFamily::BivariateGaussian:
      b = {{"family", "bivariate_gaussian"}, {"mean", c.g0.mean[0]}, {"scale", c.g0.scale[0]}, {"rho0", c.g0.corr(0, 1)}};
      break;
    case BaseFamily::DiagonalDegenerate:
      b = {{"family", "diagonal"}, {"mean", c.g0.mean[0]}, {"scale", c.g0.scale[0]}};
      break;
    case BaseFamily::NormalInvGammaPair: {
      const auto& p = *c.g0.nig;
      b = {{"family", "normal_inverse_gamma"},
           {"mean", vec_json(c.g0.mean)},
           {"rho0", c.g0.corr(0, 1)},
           {"nig",
            {{"lambda1", p.lambda1}, {"lambda2", p.lambda2}, {"alpha1", p.alpha1}, {"beta1", p.beta1}, {"alpha2", p.alpha2},
             {"beta2", p.beta2}}}};
      break;
    }
    default: {
      json corr = json::array();
      for (int a = 0; a < c.g0.corr.rows(); ++a) corr.push_back(vec_json(c.g0.corr.row(a).transpose()));
      const bool single = c.g0.num_groups() == 1 && c.g0.latent_dim() > 1;
      b = {{"family", single ? "single_group_gaussian" : "multivariate_gaussian"},
           {"mean", vec_json(c.g0.mean)},
           {"scale", vec_json(c.g0.scale)},
           {"corr", corr}};
    }
  }
  j["base"] = b;
  if (c.kernel == KernelKind::Gaussian) j["kernel"] = {{"variance", vec_json(c.kernel_var)}};
  json pr;
  pr["theta"] = c.hyper.theta.fixed ? json(nullptr) : json{{"shape", c.hyper.theta.shape}, {"rate", c.hyper.theta.rate}};
  pr["z"] = c.hyper.z.fixed ? "fixed" : "uniform";
  pr["corr"] = c.hyper.corr.fixed ? "fixed" : "uniform";
  if (c.hyper.kernel_var.kind == VariancePrior::Kind::Fixed) pr["kernel_variance"] = nullptr;
  else
    pr["kernel_variance"] = {{"kind", c.hyper.kernel_var.kind == VariancePrior::Kind::Gamma ? "gamma" : "inverse_gamma"},
                             {"shape", c.hyper.kernel_var.shape},
                             {"rate", c.hyper.kernel_var.rate}};
  j["priors"] = pr;
  j["mcmc"] = {{"iters", c.mcmc.iters},     {"burn_in", c.mcmc.burn_in}, {"thin", c.mcmc.thin},
               {"seed", c.mcmc.seed},       {"chains", c.mcmc.chains},   {"u_steps", c.mcmc.u_steps},
               {"exact_u", c.mcmc.exact_u}, {"adapt", c.mcmc.adapt}};
  j["sampler"] = {{"kind", c.sampler == SamplerKind::Blocked ? "blocked" : "marginal"}, {"truncation", c.truncation}};
  j["data"] = {{"input", rc.input},
               {"standardize", rc.standardize},
               {"grid", {{"lo", rc.grid_lo}, {"hi", rc.grid_hi}, {"points", rc.grid_points}}},
               {"density_every", rc.density_every},
               {"kept_partitions", rc.kept_partitions}};
  j["output"] = {{"dir", rc.output_dir}};
  j["dependence"] = {{"mc_reps", rc.mc_reps}, {"mc_atoms", rc.mc_atoms}, {"hdp_theta0", rc.hdp_theta0}};
  return j;
}

// ---- outputs ----------------------------------------------------------------------------

/// Writes files below one directory, creating it on first use.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {}

  std::filesystem::path path(const std::string& name) const { return root_ / name; }

  std::ofstream open(const std::string& name) {
    std::filesystem::create_directories(root_);
    std::ofstream out(path(name));
    if (!out) throw ConfigError("cannot write '" + path(name).string() + "'");
    out << std::setprecision(10);
    written_.push_back(name);
    return out;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

inline void write_csv(std::ostream& out, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  const std::size_t n = columns.empty() ? 0 : columns[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j][i];
    out << '\n';
  }
}

struct Series {
  std::string name;
  std::vector<double> x, y;
};

/// A minimal line chart.
inline std::string svg_lines(const std::string& title, const std::vector<Series>& series, const std::string& xlabel = "",
                             const std::string& ylabel = "") {
  const double W = 640, H = 400, L = 60, R = 150, T = 40, B = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]), y1 = std::max(y1, s.y[i]);
    }
  if (!(x1 > x0)) x0 -= 1, x1 += 1;
  if (!(y1 > y0)) y0 -= 1, y1 += 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};
  std::ostringstream o;
  o << std::setprecision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << L << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + k * (x1 - x0) / 4, yv = y0 + k * (y1 - y0) / 4;
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  if (!xlabel.empty()) o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  if (!ylabel.empty()) o << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 14 " << (T + H - B) / 2 << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* col = colors[s % 6];
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i)
      if (std::isfinite(series[s].y[i])) o << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
    o << "\"/>\n";
    o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (s + 1) << "\" fill=\"" << col << "\">" << series[s].name << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace furbi::io
