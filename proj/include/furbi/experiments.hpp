#pragma once

// Scaled-down experiment drivers shared by the command line tool and the
// acceptance checks: density estimation with two and three samples,
// predictive comparison on a negatively related pair of samples, and
// clustering with missing entries.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "furbi/eval.hpp"
#include "furbi/models.hpp"

namespace furbi {

namespace detail {

inline double median(std::vector<double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  const std::size_t h = x.size() / 2;
  return x.size() % 2 ? x[h] : 0.5 * (x[h - 1] + x[h]);
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? std::numeric_limits<double>::quiet_NaN() : s / x.size();
}

inline double normal_pdf(double x, double m, double sd) {
  const double z = (x - m) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace detail

inline const std::vector<std::string>& comparison_models() {
  static const std::vector<std::string> names{"exchangeable", "independent", "furbi"};
  return names;
}

// ---- two-sample density estimation ------------------------------------------------------

struct SimDensityOptions {
  std::vector<double> v_means{-10.0, 10.0};
  int reps = 10;
  int n = 20;
  int m = 100;
  int iters = 2000;
  int burn_in = 1000;
  std::uint64_t seed = 1;
  int grid_points = 401;
  double grid_lo = -20.0, grid_hi = 20.0;
  int threads = 1;
};

struct SimDensityRow {
  double v_mean = 0.0;
  std::map<std::string, std::vector<double>> miae;  ///< per model, one entry per replicate
  std::map<std::string, double> median_miae;
  double rho0_mean = 0.0;                         ///< posterior mean of rho0 (FuRBI), averaged over replicates
  std::map<std::string, std::vector<double>> density;  ///< first replicate, posterior mean of the first group
};

struct SimDensityResult {
  std::vector<double> grid;
  std::vector<SimDensityRow> rows;
};

/// Model settings for the two-sample density study. `kind` is one of
/// comparison_models().
inline ModelConfig sim_density_config(const std::string& kind, const McmcConfig& mcmc) {
  ModelConfig c;
  c.model = kind == "furbi"          ? ModelKind::TwoSampleGaussianKnownVar
            : kind == "independent"  ? ModelKind::IndependentBaseline
            : kind == "exchangeable" ? ModelKind::ExchangeableBaseline
                                     : throw std::invalid_argument("unknown comparison model '" + kind + "'");
  c.spec = {LevyFamily::GammaEqualJumps, 1.0, 0.0};
  c.g0 = bivariate_gaussian(0.0, 1.0, 0.0);
  c.kernel_var = Eigen::VectorXd::Ones(2);
  c.hyper.corr.fixed = kind != "furbi";
  c.sampler = SamplerKind::Blocked;
  c.truncation = 30;
  c.mcmc = mcmc;
  return c;
}

inline SimDensityResult sim_density(const SimDensityOptions& o) {
  SimDensityResult res;
  res.grid = linspace(o.grid_lo, o.grid_hi, o.grid_points);
  McmcConfig mcmc;
  mcmc.iters = o.iters;
  mcmc.burn_in = o.burn_in;
  RunOptions ro;
  ro.grids = {res.grid, {}};
  ro.keep_log_pred = false;
  ro.partition_every = 1000000;
  for (std::size_t iv = 0; iv < o.v_means.size(); ++iv) {
    SimDensityRow row;
    row.v_mean = o.v_means[iv];
    std::vector<double> rho;
    for (int r = 0; r < o.reps; ++r) {
      Rng data_rng(o.seed + 1000003ULL * iv + 7ULL * r);
      const Dataset d = generate_two_sample(data_rng, row.v_mean, o.n, o.m);
      for (const auto& kind : comparison_models()) {
        mcmc.seed = o.seed + 97ULL * r + 31ULL * iv + 1;
        const auto out = run_chains(sim_density_config(kind, mcmc), d, ro);
        const auto est = out.densities[0].mean();
        row.miae[kind].push_back(miae(res.grid, est, [](double x) { return detail::normal_pdf(x, 10.0, 1.0); }));
        if (r == 0) row.density[kind] = est;
        if (kind == "furbi") rho.push_back(detail::mean(out.trace("rho_12")));
      }
    }
    for (const auto& [k, v] : row.miae) row.median_miae[k] = detail::median(v);
    row.rho0_mean = detail::mean(rho);
    res.rows.push_back(std::move(row));
  }
  return res;
}

// ---- three samples ---------------------------------------------------------------------

struct ThreeGroupOptions {
  std::vector<double> x_values{-10.0, 0.0, 10.0};
  int reps = 3;
  int n = 20;
  int iters = 2000;
  int burn_in = 1000;
  std::uint64_t seed = 1;
};

struct ThreeGroupRow {
  double x = 0.0;
  double rho12 = 0.0, rho13 = 0.0, rho23 = 0.0;  ///< medians over replicates of posterior medians
};

inline ModelConfig three_group_config(const McmcConfig& mcmc) {
  ModelConfig c;
  c.model = ModelKind::MultiGroupGaussian;
  c.spec = {LevyFamily::GammaEqualJumps, 1.0, 0.0};
  c.g0 = multivariate_gaussian_corr(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3), Eigen::MatrixXd::Identity(3, 3));
  c.kernel_var = Eigen::VectorXd::Ones(3);
  c.hyper.corr.fixed = false;
  c.sampler = SamplerKind::Blocked;
  c.mcmc = mcmc;
  return c;
}

inline std::vector<ThreeGroupRow> sim_threegroup(const ThreeGroupOptions& o) {
  McmcConfig mcmc;
  mcmc.iters = o.iters;
  mcmc.burn_in = o.burn_in;
  RunOptions ro;
  ro.keep_log_pred = false;
  ro.partition_every = 1000000;
  std::vector<ThreeGroupRow> rows;
  for (std::size_t ix = 0; ix < o.x_values.size(); ++ix) {
    std::vector<double> r12, r13, r23;
    for (int r = 0; r < o.reps; ++r) {
      Rng data_rng(o.seed + 1000003ULL * ix + 7ULL * r);
      const Dataset d = generate_three_group(data_rng, o.x_values[ix], o.n);
      mcmc.seed = o.seed + 97ULL * r + 31ULL * ix + 1;
      const auto out = run_chains(three_group_config(mcmc), d, ro);
      r12.push_back(detail::median(out.trace("rho_12")));
      r13.push_back(detail::median(out.trace("rho_13")));
      r23.push_back(detail::median(out.trace("rho_23")));
    }
    rows.push_back({o.x_values[ix], detail::median(r12), detail::median(r13), detail::median(r23)});
  }
  return rows;
}

// ---- predictive comparison on two related samples --------------------------------------

struct FinanceOptions {
  int iters = 6000;
  int burn_in = 2000;
  std::uint64_t seed = 1;
  int threads = 1;
  int grid_points = 201;
};

struct FinanceRow {
  std::string model;
  CpoReport cpo;
  double rho0_mean = std::numeric_limits<double>::quiet_NaN();
  double z_mean = std::numeric_limits<double>::quiet_NaN();
};

struct FinanceResult {
  std::vector<FinanceRow> rows;
  std::vector<double> grid;  ///< standardized scale
  std::map<std::string, std::vector<std::vector<double>>> density;  ///< model -> group -> mean density
};

/// Normal-InverseGamma mixture settings. FuRBI: additive intensity with
/// z ~ Unif(0, 1), theta ~ Gamma(1, 1) and rho0 ~ Unif(-1, 1).
inline ModelConfig finance_config(const std::string& kind, const McmcConfig& mcmc) {
  ModelConfig c;
  c.model = kind == "furbi"          ? ModelKind::TwoSampleNIG
            : kind == "independent"  ? ModelKind::IndependentBaseline
            : kind == "exchangeable" ? ModelKind::ExchangeableBaseline
                                     : throw std::invalid_argument("unknown comparison model '" + kind + "'");
  c.kernel = KernelKind::GaussianNIG;
  c.g0 = normal_inv_gamma_pair(0.0, 0.0, 0.0, NigParams{1.0, 1.0, 2.0, 4.0, 2.0, 4.0});
  c.spec = kind == "furbi" ? LevySpec{LevyFamily::AdditiveGamma, 1.0, 0.5} : LevySpec{LevyFamily::GammaEqualJumps, 1.0, 0.0};
  c.hyper.theta = {false, 1.0, 1.0};
  c.hyper.z.fixed = kind != "furbi";
  c.hyper.corr.fixed = kind != "furbi";
  c.mcmc = mcmc;
  return c;
}

/// `data` is standardized here (per sample) before any model sees it.
inline FinanceResult finance_synthetic(Dataset data, const FinanceOptions& o) {
  if (!data.transform.applied) standardize(data);
  FinanceResult res;
  res.grid = linspace(-4.0, 4.0, o.grid_points);
  McmcConfig mcmc;
  mcmc.iters = o.iters;
  mcmc.burn_in = o.burn_in;
  mcmc.seed = o.seed;
  RunOptions ro;
  ro.grids = {res.grid, res.grid};
  ro.density_every = 20;
  ro.partition_every = 1000000;
  ro.threads = o.threads;
  for (const auto& kind : comparison_models()) {
    const auto out = run_chains(finance_config(kind, mcmc), data, ro);
    FinanceRow row{kind, cpo_report(out.log_pred)};
    if (kind == "furbi") {
      row.rho0_mean = detail::mean(out.trace("rho0"));
      row.z_mean = detail::mean(out.trace("z"));
    }
    res.rows.push_back(row);
    for (const auto& g : out.densities) res.density[kind].push_back(g.mean());
  }
  return res;
}

// ---- clustering with missing entries ---------------------------------------------------

struct MissingOptions {
  MissingScenario scenario;
  int iters = 5000;
  int burn_in = 2500;
  std::uint64_t seed = 1;
  double z = 0.5;
  double theta = 0.1;
  int kept_partitions = 1000;
};

struct MissingResult {
  double mean_k = 0.0;
  double rand_index = 0.0;      ///< of the point estimate against the truth
  double mean_rand_index = 0.0; ///< averaged over kept partitions
  double missing_rate = 0.0;
  int groups = 0;
  std::vector<int> estimate;  ///< per original row
  std::vector<int> truth;
  std::vector<double> k_trace;
};

/// Additive intensity over the missing-pattern groups, theta fixed, trivariate
/// Gaussian atoms with free correlations and Gamma(3, 3) kernel variances.
inline ModelConfig missing_config(int P, double z, double theta, const McmcConfig& mcmc) {
  ModelConfig c;
  c.model = ModelKind::MissingDataClustering;
  c.spec = {LevyFamily::AdditiveGamma, theta, z};
  c.g0 = multivariate_gaussian_corr(Eigen::VectorXd::Zero(P), Eigen::VectorXd::Ones(P), Eigen::MatrixXd::Identity(P, P));
  c.kernel_var = Eigen::VectorXd::Constant(P, 1.0);
  c.hyper.corr.fixed = false;
  c.hyper.kernel_var = {VariancePrior::Kind::Gamma, 3.0, 3.0};
  c.mcmc = mcmc;
  return c;
}

inline MissingResult missing_clustering(const MissingData& md, const MissingOptions& o) {
  Dataset d = missing_pattern_split(md.observed);
  standardize(d);
  McmcConfig mcmc;
  mcmc.iters = o.iters;
  mcmc.burn_in = o.burn_in;
  mcmc.seed = o.seed;
  RunOptions ro;
  ro.keep_log_pred = false;
  ro.partition_every = std::max(1, (o.iters - o.burn_in) / std::max(1, o.kept_partitions));
  const auto out = run_chains(missing_config(d.dim, o.z, o.theta, mcmc), d, ro);
  MissingResult r;
  r.groups = d.num_groups();
  r.k_trace = out.trace("k");
  r.mean_k = detail::mean(r.k_trace);
  // Partitions come in dataset order; map back to rows.
  auto to_rows = [&](const std::vector<int>& p) {
    std::vector<int> q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) q[d.row[i]] = p[i];
    return q;
  };
  r.estimate = to_rows(vi_point_estimate(out.partitions));
  r.truth = md.truth;
  r.rand_index = rand_index(r.estimate, md.truth);
  double s = 0.0;
  for (const auto& p : out.partitions) s += rand_index(to_rows(p), md.truth);
  r.mean_rand_index = s / out.partitions.size();
  int miss = 0;
  for (int i = 0; i < md.observed.size(); ++i) miss += std::isnan(md.observed.data()[i]);
  r.missing_rate = static_cast<double>(miss) / md.observed.size();
  return r;
}

}  // namespace furbi
