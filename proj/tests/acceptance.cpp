// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "furbi/bvn.hpp"
#include "furbi/dependence.hpp"
#include "furbi/eval.hpp"
#include "furbi/experiments.hpp"
#include "furbi/hyper_ties.hpp"
#include "furbi/io.hpp"
#include "furbi/samplers.hpp"

using namespace furbi;

namespace {

using Vec = Eigen::VectorXd;

struct Outcome {
  bool pass = false;
  std::string detail;
};

LevySpec levy(LevyFamily f, double theta, double z = 0.0) {
  LevySpec s;
  s.family = f;
  s.theta = theta;
  s.z = z;
  return s;
}

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

std::pair<double, double> mean_var(const std::vector<double>& x) {
  double m = 0.0, v = 0.0;
  for (double e : x) m += e;
  m /= x.size();
  for (double e : x) v += (e - m) * (e - m);
  return {m, v / (x.size() - 1)};
}

// ---- 1 ----

Outcome closed_vs_quadrature() {
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-9;
  cfg.abs_tol = 1e-11;
  cfg.max_subdivisions = 500;
  double worst = 0.0;
  for (double theta : {0.5, 1.0, 2.0, 5.0}) {
    const auto eq = levy(LevyFamily::GammaEqualJumps, theta);
    worst = std::max(worst, std::abs(gamma_numeric(eq, cfg) - 1.0 / (1.0 + theta)));
    for (double z : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const auto add = levy(LevyFamily::AdditiveGamma, theta, z);
      worst = std::max(worst, std::abs(gamma_numeric(add, cfg) - gamma_closed(add)));
    }
  }
  return {worst < 1e-6, fmt("max |numeric - closed| = %.2e (< 1e-6)", worst)};
}

// ---- 2 ----

Outcome monte_carlo_oracle() {
  Rng rng(2024);
  const auto r = mc_dependence_oracle(levy(LevyFamily::GammaEqualJumps, 1.0), bivariate_gaussian(0, 1, -0.9), 0, 100000, rng);
  const double zb = (r.beta - 0.5) / *r.beta_stderr;
  const double zg = (r.gamma - 0.5) / *r.mc_stderr;
  const double zc = (r.corr_across + 0.45) / *r.across_stderr;
  const bool ok = std::abs(zb) < 3 && std::abs(zg) < 3 && std::abs(zc) < 3;
  return {ok, fmt("beta %.4f (z %.2f), gamma %.4f (z %.2f), corr %.4f (z %.2f)", r.beta, zb, r.gamma, zg, r.corr_across, zc)};
}

// ---- 3 ----

Outcome tie_bounds_and_sweep() {
  int violations = 0, configs = 0;
  for (double theta : {0.05, 0.3, 1.0, 4.0, 20.0})
    for (double z : {0.0, 0.1, 0.5, 0.9, 1.0})
      for (auto f : {LevyFamily::GammaEqualJumps, LevyFamily::InvGaussEqualJumps, LevyFamily::AdditiveGamma}) {
        const auto s = levy(f, theta, z);
        ++configs;
        violations += gamma_closed(s) > beta_closed(s) + 1e-12;
      }
  double worst = 0.0;
  for (double theta : {0.5, 1.0, 3.0}) {
    const auto s = levy(LevyFamily::GammaEqualJumps, theta);
    const double b = beta_closed(s);
    for (double r : {-1.0, -0.5, 0.0, 0.5, 1.0})
      worst = std::max(worst, std::abs(corr_observables(s, bivariate_gaussian(0, 1, r)).across - r * b));
  }
  return {violations == 0 && worst < 1e-10,
          fmt("gamma > beta in %d of %d configurations; sweep max error %.1e", violations, configs, worst)};
}

// ---- 4 ----

// Functions from X values to {0..c} injective on non-zero targets.
int brute_force_count(int k, int c) {
  int total = 0;
  std::vector<int> f(k, 0);
  while (true) {
    std::set<int> used;
    bool ok = true;
    for (int v : f)
      if (v) ok = ok && used.insert(v).second;
    total += ok;
    int pos = 0;
    while (pos < k && ++f[pos] > c) f[pos++] = 0;
    if (pos == k) break;
  }
  return total;
}

Outcome hyper_tie_enumeration() {
  int mismatches = 0;
  for (int k = 0; k <= 4; ++k)
    for (int c = 0; c <= 4; ++c) {
      if (k + c == 0) continue;
      mismatches += static_cast<int>(enumerate_structures(k, c).size()) != brute_force_count(k, c);
    }
  std::set<std::vector<std::pair<int, int>>> got, want{{{1, 1}, {2, 0}}, {{1, 0}, {2, 1}}, {{0, 1}, {1, 0}, {2, 0}}};
  for (const auto& p : enumerate_structures(2, 1)) got.insert(p.pairs);
  const bool support = got == want;
  return {mismatches == 0 && support,
          fmt("%d count mismatches over k, c <= 4; (2,1) support %s", mismatches, support ? "exact" : "differs")};
}

// ---- 5 ----

struct GewekeStats {
  std::vector<double> k, c, shared, u1;
};

Outcome geweke() {
  const double theta = 1.2;
  const auto spec = levy(LevyFamily::GammaEqualJumps, theta);
  const auto g0 = bivariate_gaussian(0.0, 1.0, 0.5);
  const Vec s2 = Vec::Constant(2, 0.5);
  const std::vector<int> group{0, 0, 0, 1, 1, 1};
  const std::vector<int> sizes_g{3, 3};
  const int N = 6, draws = 10000;
  Rng rng(505);

  auto record = [](GewekeStats& st, const std::vector<std::vector<int>>& counts, double u1) {
    int k = 0, c = 0, sh = 0;
    for (const auto& v : counts) {
      k += v[0] > 0;
      c += v[1] > 0;
      sh += v[0] > 0 && v[1] > 0;
    }
    st.k.push_back(k);
    st.c.push_back(c);
    st.shared.push_back(sh);
    st.u1.push_back(u1);
  };

  // Forward: Chinese restaurant partition, U from its conditional given the partition.
  GewekeStats fw;
  for (int r = 0; r < draws; ++r) {
    std::vector<int> lab(N), sizes;
    for (int i = 0; i < N; ++i) {
      std::vector<double> lw{std::log(theta)};
      for (int s : sizes) lw.push_back(std::log(s));
      const int k = static_cast<int>(categorical_log(rng, lw));
      if (k == 0) {
        lab[i] = static_cast<int>(sizes.size());
        sizes.push_back(1);
      } else {
        lab[i] = k - 1;
        ++sizes[k - 1];
      }
    }
    std::vector<std::vector<int>> counts(sizes.size(), std::vector<int>(2, 0));
    for (int i = 0; i < N; ++i) ++counts[lab[i]][group[i]];
    std::vector<double> u(2, 0.0);
    AdaptiveStep st;
    update_u(spec, counts, sizes_g, u, st, 1, true, false, rng);
    record(fw, counts, u[0]);
  }

  // Successive conditional: sampler sweep, then fresh data from the kernel.
  std::vector<Vec> vals(N, Vec::Zero(1));
  MarginalSampler<GaussianComponents> s(spec, GaussianComponents(g0, s2), group, vals);
  s.initialize(rng);
  s.set_u({0.5, 0.5});
  GewekeStats sc;
  const int thin = 10;
  for (int t = 0; t < draws * thin; ++t) {
    s.sweep(rng, false, 2, false);
    for (int i = 0; i < N; ++i) s.set_value(i, s.simulate_value(i, rng));
    if (t % thin == 0) record(sc, s.cluster_counts(), s.u()[0]);
  }

  const double pk = ks_two_sample(fw.k, sc.k).p_value, pc = ks_two_sample(fw.c, sc.c).p_value;
  const double ps = ks_two_sample(fw.shared, sc.shared).p_value, pu = ks_two_sample(fw.u1, sc.u1).p_value;
  const bool ok = std::min({pk, pc, ps, pu}) > 0.01;
  return {ok, fmt("KS p: k %.3f, c %.3f, |pairs| %.3f, U1 %.3f (> 0.01)", pk, pc, ps, pu)};
}

// ---- 6 ----

double p0_mass(double lo, double hi) { return normal_cdf(hi) - normal_cdf(lo); }

Outcome predictive_laws() {
  const auto spec = levy(LevyFamily::AdditiveGamma, 1.0, 0.5);
  const double rho0 = 0.6;
  const auto g0 = bivariate_gaussian(0.0, 1.0, rho0);
  const std::vector<int> group{0, 0, 1};
  std::vector<Vec> vals(3, Vec::Zero(1));
  MarginalSampler<GaussianComponents> s(spec, GaussianComponents(g0, Vec::Constant(2, 0.5), {}, {}, true), group, vals);
  Rng rng(606);
  s.initialize(rng);

  // A = (-inf, 0.3], B = (-0.5, 1.0].
  const double a_hi = 0.3, b_lo = -0.5, b_hi = 1.0;
  const int burn = 2000, pairs = 100000;
  std::vector<double> within, across;
  for (int t = 0; t < burn + pairs; ++t) {
    s.sweep(rng, t < burn);
    if (t < burn) continue;
    std::map<int, Atom> atoms;
    auto value = [&](int i) {
      const int c = s.cluster_of(i);
      if (!atoms.count(c)) atoms[c] = sample_pair(g0, rng);
      return atoms[c][group[i]][0];
    };
    const double x1 = value(0), x2 = value(1), y1 = value(2);
    within.push_back(x1 <= a_hi && x2 > b_lo && x2 <= b_hi);
    across.push_back(x1 <= a_hi && y1 > b_lo && y1 <= b_hi);
  }
  const double beta = beta_closed(spec), gamma = gamma_closed(spec);
  const double pa = normal_cdf(a_hi), pb = p0_mass(b_lo, b_hi), pab = p0_mass(b_lo, a_hi);
  const double gab = bvn_cdf(a_hi, b_hi, rho0) - bvn_cdf(a_hi, b_lo, rho0);
  const double want_w = beta * pab + (1 - beta) * pa * pb;
  const double want_a = gamma * gab + (1 - gamma) * pa * pb;
  const double mw = mean_var(within).first, ma = mean_var(across).first;
  const double zw = (mw - want_w) / batch_means_stderr(within), za = (ma - want_a) / batch_means_stderr(across);
  return {std::abs(zw) < 3 && std::abs(za) < 3,
          fmt("within %.4f vs %.4f (z %.2f); across %.4f vs %.4f (z %.2f)", mw, want_w, zw, ma, want_a, za)};
}

// ---- 7 ----

Outcome fk_total_mass() {
  const double theta = 1.5;
  const auto spec = levy(LevyFamily::GammaEqualJumps, theta);
  const auto g0 = bivariate_gaussian(0.0, 1.0, 0.3);
  Rng rng(707);
  FkContext ctx;
  ctx.truncation = 2000;
  ctx.with_atoms = false;
  const int n = 10000;
  std::vector<double> tot;
  for (int r = 0; r < n; ++r) {
    const auto d = ferguson_klass_draw(spec, g0, ctx, rng);
    tot.push_back(d.total(0) + d.residual[0]);
  }
  const auto [m, v] = mean_var(tot);
  double m4 = 0.0;
  for (double x : tot) m4 += std::pow(x - m, 4) / n;
  const double se_m = std::sqrt(v / n), se_v = std::sqrt((m4 - v * v) / n);
  const double zm = (m - theta) / se_m, zv = (v - theta) / se_v;
  return {std::abs(zm) < 3 && std::abs(zv) < 3, fmt("mean %.4f (z %.2f), variance %.4f (z %.2f), target %.2f", m, zm, v, zv, theta)};
}

// ---- 8 ----

Outcome density_study() {
  SimDensityOptions o;
  o.v_means = {-10.0, 10.0};
  const auto res = sim_density(o);
  const auto& lo = res.rows.at(0).median_miae;
  const auto& hi = res.rows.at(1).median_miae;
  const bool order_lo = lo.at("furbi") < lo.at("independent") && lo.at("independent") < lo.at("exchangeable");
  const bool best_hi = hi.at("exchangeable") < hi.at("furbi") && hi.at("exchangeable") < hi.at("independent");
  return {order_lo && best_hi,
          fmt("median MIAE v=-10: furbi %.3f, ind %.3f, exch %.3f; v=+10: furbi %.3f, ind %.3f, exch %.3f", lo.at("furbi"),
              lo.at("independent"), lo.at("exchangeable"), hi.at("furbi"), hi.at("independent"), hi.at("exchangeable"))};
}

// ---- 9 ----

Outcome missing_clustering_mcar() {
  MissingOptions o;
  Rng rng(4);
  const auto md = generate_missing(rng, o.scenario);
  const auto r = missing_clustering(md, o);
  const bool ok = r.mean_k >= 3.0 && r.mean_k <= 6.0 && r.rand_index >= 0.7;
  return {ok, fmt("missing %.1f%%, %d groups, mean K %.2f in [3, 6], Rand index %.3f (>= 0.7)", 100 * r.missing_rate,
                  r.groups, r.mean_k, r.rand_index)};
}

// ---- 10 ----

Outcome predictive_comparison() {
  const std::string path = std::string(FURBI_SOURCE_DIR) + "/data/finance_synthetic.csv";
  const auto data = io::load_dataset(io::read_table(path), path, false).data;
  const auto res = finance_synthetic(data, FinanceOptions{});
  std::map<std::string, double> a;
  for (const auto& r : res.rows) a[r.model] = r.cpo.alcpo;
  const bool ok = a.at("furbi") > a.at("exchangeable") && a.at("furbi") > a.at("independent");
  return {ok, fmt("ALCPO furbi %.4f, exch %.4f, ind %.4f", a.at("furbi"), a.at("exchangeable"), a.at("independent"))};
}

// ---- 11 ----

Outcome metric_oracles() {
  const double ri = rand_index({1, 1, 2, 2}, {1, 2, 1, 2});
  Rng rng(1111);
  const double phi = 0.9;
  std::vector<double> ar(100000);
  double x = std_normal(rng) / std::sqrt(1 - phi * phi);
  for (double& e : ar) e = x = phi * x + std_normal(rng);
  const double ratio = ess(ar).ess / ar.size(), theory = (1 - phi) / (1 + phi);
  double cpo_err = 0.0;
  for (double c : {-7.3, -0.2, 0.0, 2.5}) cpo_err = std::max(cpo_err, std::abs(log_cpo(std::vector<double>(500, c)) - c));
  const bool ok = std::abs(ri - 1.0 / 3.0) < 1e-15 && std::abs(ratio / theory - 1) <= 0.5 && cpo_err < 1e-12;
  return {ok, fmt("rand index %.6f; AR(1) ESS/N %.4f vs %.4f; constant-trace CPO error %.1e", ri, ratio, theory, cpo_err)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget_s;  // 0: none
  };
  const std::vector<Criterion> all{
      {"closed form vs quadrature", closed_vs_quadrature, 10},
      {"Monte Carlo dependence oracle", monte_carlo_oracle, 120},
      {"tie bounds and correlation sweep", tie_bounds_and_sweep, 0},
      {"hyper-tie enumeration", hyper_tie_enumeration, 0},
      {"sampler joint-distribution test", geweke, 600},
      {"first-pair predictive laws", predictive_laws, 0},
      {"Ferguson-Klass total mass", fk_total_mass, 0},
      {"two-sample density study", density_study, 1800},
      {"clustering with missing entries", missing_clustering_mcar, 1800},
      {"predictive comparison on related samples", predictive_comparison, 1800},
      {"metric oracles", metric_oracles, 0},
  };
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = all[i].budget_s <= 0 || secs < all[i].budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::string budget = all[i].budget_s > 0 ? fmt(" (< %.0f s)", all[i].budget_s) : "";
    std::printf("%s %2zu %s: %s; %.1f s%s\n", pass ? "PASS" : "FAIL", i + 1, all[i].name, o.detail.c_str(), secs,
                budget.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed ? 1 : 0;
}
