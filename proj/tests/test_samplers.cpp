#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "furbi/dependence.hpp"
#include "furbi/eval.hpp"
#include "furbi/quadrature.hpp"
#include "furbi/samplers.hpp"

using namespace furbi;

namespace {

using Vec = Eigen::VectorXd;

Vec scalar(double x) { return Vec::Constant(1, x); }

LevySpec levy(LevyFamily f, double theta, double z = 0.0) {
  LevySpec s;
  s.family = f;
  s.theta = theta;
  s.z = z;
  return s;
}

GaussianComponents free_components(double rho0 = 0.5, bool likelihood_free = true) {
  return GaussianComponents(bivariate_gaussian(0.0, 1.0, rho0), Vec::Constant(2, 0.5), {}, {}, likelihood_free);
}

MarginalSampler<GaussianComponents> two_group_sampler(const LevySpec& spec, int n, int m, Hyperpriors hp = {},
                                                      GaussianComponents comp = free_components()) {
  std::vector<int> group;
  std::vector<Vec> vals;
  for (int i = 0; i < n; ++i) group.push_back(0), vals.push_back(scalar(0.1 * i));
  for (int j = 0; j < m; ++j) group.push_back(1), vals.push_back(scalar(-0.1 * j));
  return MarginalSampler<GaussianComponents>(spec, std::move(comp), group, vals, hp);
}

// E[U1 / (1 + U1 + U2)] under the U full conditional, by quadrature.
double u_stat_oracle(const LevySpec& spec, const std::vector<std::vector<int>>& counts, std::vector<int> sizes) {
  auto log_dens = [&](double u1, double u2) {
    std::vector<double> u{u1, u2};
    return log_u_target(spec, counts, sizes, u) - std::log(u1) - std::log(u2);
  };
  const double shift = log_dens(1.0, 1.0);
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-7;
  auto num = integrate_posneg_2d(
      [&](double a, double b) { return a > 0 && b > 0 ? a / (1 + a + b) * std::exp(log_dens(a, b) - shift) : 0.0; }, cfg);
  auto den = integrate_posneg_2d(
      [&](double a, double b) { return a > 0 && b > 0 ? std::exp(log_dens(a, b) - shift) : 0.0; }, cfg);
  return num.value / den.value;
}

double u_stat_chain(const LevySpec& spec, const std::vector<std::vector<int>>& counts, std::vector<int> sizes,
                    bool exact, int draws, double* se) {
  Rng rng(11);
  std::vector<double> u{1.0, 1.0}, trace;
  AdaptiveStep step{std::log(0.8)};
  for (int t = 0; t < draws; ++t) {
    update_u(spec, counts, sizes, u, step, 1, exact, t < 2000, rng);
    if (t >= 2000) trace.push_back(u[0] / (1 + u[0] + u[1]));
  }
  *se = batch_means_stderr(trace);
  double s = 0.0;
  for (double v : trace) s += v;
  return s / trace.size();
}

}  // namespace

// ---- U update -----------------------------------------------------------------------

TEST(UUpdate, RandomWalkMatchesQuadratureAdditive) {
  const auto spec = levy(LevyFamily::AdditiveGamma, 1.0, 0.5);
  const std::vector<std::vector<int>> counts{{1, 1}, {1, 0}, {0, 2}};
  const std::vector<int> sizes{2, 3};
  double se = 0.0;
  const double mc = u_stat_chain(spec, counts, sizes, false, 200000, &se);
  const double q = u_stat_oracle(spec, counts, sizes);
  EXPECT_NEAR(mc, q, 4 * se + 2e-3);
}

TEST(UUpdate, ExactDrawMatchesQuadratureGamma) {
  const auto spec = levy(LevyFamily::GammaEqualJumps, 1.3);
  const std::vector<std::vector<int>> counts{{2, 1}, {0, 1}};
  const std::vector<int> sizes{2, 2};
  double se = 0.0;
  const double mc = u_stat_chain(spec, counts, sizes, true, 100000, &se);
  const double rw = u_stat_chain(spec, counts, sizes, false, 200000, &se);
  const double q = u_stat_oracle(spec, counts, sizes);
  EXPECT_NEAR(mc, q, 3e-3);
  EXPECT_NEAR(rw, q, 4 * se + 2e-3);
}

TEST(UUpdate, EmptyGroupStaysAtZero) {
  const auto spec = levy(LevyFamily::AdditiveGamma, 1.0, 0.3);
  Rng rng(3);
  std::vector<double> u{0.7, 0.4};
  AdaptiveStep step;
  update_u(spec, {{2, 0}}, std::vector<int>{2, 0}, u, step, 5, false, false, rng);
  EXPECT_EQ(u[1], 0.0);
  EXPECT_GT(u[0], 0.0);
}

// ---- predictive weights -----------------------------------------------------------------

TEST(Predictive, WeightsNormalize) {
  auto s = two_group_sampler(levy(LevyFamily::AdditiveGamma, 0.8, 0.4), 4, 3);
  Rng rng(5);
  s.initialize(rng);
  for (int t = 0; t < 20; ++t) s.sweep(rng);
  for (int g = 0; g < 2; ++g) {
    const auto pw = s.predictive_weights(g);
    double tot = 0.0;
    for (double w : pw.weights) tot += w;
    EXPECT_NEAR(tot, 1.0, 1e-12);
  }
}

TEST(Predictive, EmptyDataGivesBaseOnly) {
  MarginalSampler<GaussianComponents> s(levy(LevyFamily::GammaEqualJumps, 1.0), free_components(), {}, {});
  Rng rng(1);
  s.initialize(rng);
  const auto pw = s.predictive_weights(0);
  ASSERT_EQ(pw.weights.size(), 1u);
  EXPECT_DOUBLE_EQ(pw.weights[0], 1.0);
}

TEST(Predictive, InverseGaussianPattern) {
  const double theta = 1.7;
  auto s = two_group_sampler(levy(LevyFamily::InvGaussEqualJumps, theta), 3, 2);
  Rng rng(2);
  // Clusters: {x0, x1, y0} hyper-tied, {x2} first-only, {y1} second-only.
  s.set_labels({0, 0, 1, 0, 2}, rng);
  s.set_u({0.6, 0.9});
  const double U = 1.5;
  for (int g = 0; g < 2; ++g) {
    const auto pw = s.predictive_weights(g);
    ASSERT_EQ(pw.weights.size(), 4u);
    for (std::size_t k = 1; k < pw.weights.size(); ++k) {
      const int size = pw.counts[k][0] + pw.counts[k][1];
      const double expected = 2.0 * (size - 0.5) / (theta * std::sqrt(2.0 * U + 1.0));
      EXPECT_NEAR(pw.weights[k] / pw.weights[0], expected, 1e-10);
    }
  }
}

TEST(Predictive, GammaEqualJumpsIsPolya) {
  const double theta = 0.9;
  auto s = two_group_sampler(levy(LevyFamily::GammaEqualJumps, theta), 2, 2);
  Rng rng(2);
  s.set_labels({0, 1, 0, 2}, rng);
  s.set_u({0.3, 2.0});
  const auto pw = s.predictive_weights(1);
  for (std::size_t k = 1; k < pw.weights.size(); ++k)
    EXPECT_NEAR(pw.weights[k] / pw.weights[0], (pw.counts[k][0] + pw.counts[k][1]) / theta, 1e-10);
}

TEST(Predictive, FullyIdiosyncraticBlocksCrossGroupClusters) {
  auto s = two_group_sampler(levy(LevyFamily::AdditiveGamma, 1.0, 1.0), 2, 1);
  Rng rng(4);
  s.set_labels({0, 1, 2}, rng);
  const auto pw = s.predictive_weights(1);
  for (std::size_t k = 1; k < pw.weights.size(); ++k) {
    if (pw.counts[k][1] == 0) EXPECT_EQ(pw.weights[k], 0.0);
    else EXPECT_GT(pw.weights[k], 0.0);
  }
  for (int t = 0; t < 50; ++t) {
    s.sweep(rng);
    EXPECT_EQ(s.num_shared_clusters(), 0);
  }
}

TEST(Predictive, DensityIntegratesToOne) {
  GaussianComponents comp(bivariate_gaussian(0.0, 1.0, 0.6), Vec::Constant(2, 0.3));
  std::vector<int> group{0, 0, 1, 1, 0};
  std::vector<Vec> vals{scalar(-1.0), scalar(-0.8), scalar(1.1), scalar(0.9), scalar(0.2)};
  MarginalSampler<GaussianComponents> s(levy(LevyFamily::AdditiveGamma, 1.0, 0.5), comp, group, vals);
  Rng rng(8);
  s.initialize(rng);
  for (int t = 0; t < 10; ++t) s.sweep(rng);
  for (int g = 0; g < 2; ++g) {
    QuadratureConfig cfg;
    cfg.rel_tol = 1e-9;
    const auto r = integrate([&](double w) { return std::exp(s.log_predictive_density(g, scalar(w))); }, -15.0, 15.0, cfg);
    EXPECT_NEAR(r.value, 1.0, 1e-6);
  }
}

// ---- prior laws of the likelihood-free chain ------------------------------------------------

namespace {

// Fraction of sweeps in which the first two items share a cluster.
std::pair<double, double> tie_frequency(const LevySpec& spec, int n, int m, int sweeps, std::uint64_t seed) {
  auto s = two_group_sampler(spec, n, m);
  Rng rng(seed);
  s.initialize(rng);
  std::vector<double> trace;
  for (int t = 0; t < sweeps; ++t) {
    s.sweep(rng, t < 1000);
    if (t >= 1000) trace.push_back(s.cluster_of(0) == s.cluster_of(1) ? 1.0 : 0.0);
  }
  double mean = 0.0;
  for (double v : trace) mean += v;
  return {mean / trace.size(), batch_means_stderr(trace)};
}

}  // namespace

TEST(PriorLaws, CrossTieProbability) {
  for (double z : {0.0, 0.5}) {
    const auto spec = levy(LevyFamily::AdditiveGamma, 1.0, z);
    const auto [p, se] = tie_frequency(spec, 1, 1, 60000, 21);
    EXPECT_NEAR(p, gamma_closed(spec), 4 * se + 0.01) << "z=" << z;
  }
}

TEST(PriorLaws, WithinTieProbability) {
  for (auto spec : {levy(LevyFamily::AdditiveGamma, 2.0, 0.5), levy(LevyFamily::InvGaussEqualJumps, 1.0)}) {
    const auto [p, se] = tie_frequency(spec, 2, 0, 60000, 22);
    EXPECT_NEAR(p, beta_closed(spec), 4 * se + 0.01);
  }
}

TEST(PriorLaws, ChineseRestaurantReduction) {
  const double theta = 0.7;
  auto s = two_group_sampler(levy(LevyFamily::GammaEqualJumps, theta), 2, 1);
  Rng rng(30);
  s.initialize(rng);
  std::map<std::vector<int>, double> freq;
  const int T = 60000;
  for (int t = 0; t < T; ++t) {
    s.sweep(rng, false, 1, true);
    freq[s.labels()] += 1.0 / T;
  }
  const double d = (1 + theta) * (2 + theta);
  auto at = [&](int a, int b, int c) { return freq[std::vector<int>{a, b, c}]; };
  EXPECT_NEAR(at(0, 0, 0), 2 / d, 0.015);
  EXPECT_NEAR(at(0, 0, 1), theta / d, 0.015);
  EXPECT_NEAR(at(0, 1, 0), theta / d, 0.015);
  EXPECT_NEAR(at(0, 1, 1), theta / d, 0.015);
  EXPECT_NEAR(at(0, 1, 2), theta * theta / d, 0.015);
}

TEST(PriorLaws, ThetaPriorRecovered) {
  Hyperpriors hp;
  hp.theta = {false, 2.0, 1.0};
  auto s = two_group_sampler(levy(LevyFamily::GammaEqualJumps, 1.0), 3, 3, hp);
  Rng rng(31);
  s.initialize(rng);
  std::vector<double> trace;
  for (int t = 0; t < 60000; ++t) {
    s.sweep(rng, false, 1, true);
    if (t >= 1000) trace.push_back(s.spec().theta);
  }
  double mean = 0.0;
  for (double v : trace) mean += v;
  mean /= trace.size();
  EXPECT_NEAR(mean, 2.0, 4 * batch_means_stderr(trace) + 0.02);
}

TEST(PriorLaws, CorrelationPriorRecovered) {
  Hyperpriors hp;
  CorrPrior cp{false, 0.4};
  GaussianComponents comp(bivariate_gaussian(0.0, 1.0, 0.0), Vec::Constant(2, 0.5), cp, {}, true);
  auto s = two_group_sampler(levy(LevyFamily::AdditiveGamma, 1.0, 0.3), 3, 3, hp, comp);
  Rng rng(32);
  s.initialize(rng);
  std::vector<double> r, r2;
  for (int t = 0; t < 60000; ++t) {
    s.sweep(rng, t < 2000);
    if (t >= 2000) {
      const double v = s.components().base().corr(0, 1);
      r.push_back(v);
      r2.push_back(v * v);
    }
  }
  double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < r.size(); ++i) m1 += r[i], m2 += r2[i];
  m1 /= r.size();
  m2 /= r.size();
  EXPECT_NEAR(m1, 0.0, 4 * batch_means_stderr(r) + 0.01);
  EXPECT_NEAR(m2, 1.0 / 3.0, 4 * batch_means_stderr(r2) + 0.01);
}

TEST(PriorLaws, ZPriorRecovered) {
  Hyperpriors hp;
  hp.z = {false, 0.3};
  auto s = two_group_sampler(levy(LevyFamily::AdditiveGamma, 1.0, 0.5), 3, 2, hp);
  Rng rng(33);
  s.initialize(rng);
  std::vector<double> z, z2;
  for (int t = 0; t < 60000; ++t) {
    s.sweep(rng, t < 2000);
    if (t >= 2000) {
      z.push_back(s.spec().z);
      z2.push_back(s.spec().z * s.spec().z);
    }
  }
  double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < z.size(); ++i) m1 += z[i], m2 += z2[i];
  m1 /= z.size();
  m2 /= z.size();
  EXPECT_NEAR(m1, 0.5, 4 * batch_means_stderr(z) + 0.01);
  EXPECT_NEAR(m2, 1.0 / 3.0, 4 * batch_means_stderr(z2) + 0.01);
}

TEST(Hyper, ReflectionAndDefiniteness) {
  EXPECT_NEAR(reflect(7.3, -1.0, 1.0), -0.7, 1e-12);
  EXPECT_NEAR(reflect(1.3, -1.0, 1.0), 0.7, 1e-12);
  EXPECT_NEAR(reflect(-1.5, -1.0, 1.0), -0.5, 1e-12);
  EXPECT_NEAR(reflect(0.25, 0.0, 1.0), 0.25, 1e-12);
  EXPECT_NEAR(reflect(-0.2, 0.0, 1.0), 0.2, 1e-12);

  Eigen::Matrix3d corr = Eigen::Matrix3d::Identity();
  GaussianComponents comp(missing_data_degenerate(Vec::Zero(3), Vec::Ones(3), corr, {{0, 1, 2}}), Vec::Constant(3, 0.5),
                          CorrPrior{false, 0.8});
  Rng rng(40);
  std::vector<GaussAtom> atoms(6, comp.empty_atom());
  for (auto& a : atoms) {
    Vec w(3);
    for (int j = 0; j < 3; ++j) w[j] = std_normal(rng);
    comp.add(a, 0, w, rng);
    comp.refresh(a, rng);
  }
  std::vector<GaussAtom*> ptrs;
  for (auto& a : atoms) ptrs.push_back(&a);
  for (int t = 0; t < 2000; ++t) {
    comp.update_hyper(std::span<GaussAtom* const>(ptrs), rng, true);
    const double ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(comp.base().corr).eigenvalues().minCoeff();
    ASSERT_GT(ev, 1e-10);
  }
}

// ---- Geweke joint-distribution test ----------------------------------------------------------

namespace {

// Marginal-conditional versus successive-conditional simulation of
// (partition, U, data) under gamma equal jumps, where the partition law is
// the Chinese restaurant process over all observations.
void geweke_check(const BaseMeasure& g0, const std::vector<int>& group, std::uint64_t seed) {
  const double theta = 1.2;
  const auto spec = levy(LevyFamily::GammaEqualJumps, theta);
  const Vec s2 = Vec::Constant(g0.latent_dim(), 0.5);
  const int N = static_cast<int>(group.size()), G = g0.num_groups();
  std::vector<int> sizes_g(G, 0);
  for (int g : group) ++sizes_g[g];
  Rng rng(seed);

  struct Stats {
    std::vector<double> k, shared, u1, w;
  };
  auto record = [](Stats& st, int k, int shared, double u1, double w) {
    st.k.push_back(k);
    st.shared.push_back(shared);
    st.u1.push_back(u1 / (1.0 + u1));
    st.w.push_back(w);
  };

  // Marginal-conditional: partition from the Chinese restaurant process,
  // atoms from G0, data from the kernel, U from its exact conditional.
  Stats mc;
  const int draws = 4000;
  for (int r = 0; r < draws; ++r) {
    std::vector<int> lab(N);
    std::vector<int> sizes;
    for (int i = 0; i < N; ++i) {
      std::vector<double> lw{std::log(theta)};
      for (int c : sizes) lw.push_back(std::log(c));
      const int k = static_cast<int>(categorical_log(rng, lw));
      if (k == 0) {
        lab[i] = static_cast<int>(sizes.size());
        sizes.push_back(1);
      } else {
        lab[i] = k - 1;
        ++sizes[k - 1];
      }
    }
    std::vector<Vec> mu;
    for (std::size_t c = 0; c < sizes.size(); ++c) mu.push_back(detail::mvn_draw(rng, g0.mean, g0.covariance()));
    double wsum = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j : g0.groups[group[i]]) wsum += mu[lab[i]][j] + std::sqrt(0.5) * std_normal(rng);
    std::vector<std::vector<int>> counts(sizes.size(), std::vector<int>(G, 0));
    for (int i = 0; i < N; ++i) ++counts[lab[i]][group[i]];
    int shared = 0;
    for (const auto& c : counts) shared += std::count_if(c.begin(), c.end(), [](int v) { return v > 0; }) > 1;
    std::vector<double> u(G, 0.0);
    AdaptiveStep st;
    update_u(spec, counts, sizes_g, u, st, 1, true, false, rng);
    record(mc, static_cast<int>(sizes.size()), shared, u[0], wsum);
  }

  // Successive-conditional: alternate a sampler sweep with fresh data drawn
  // from the kernel given the current state.
  std::vector<Vec> vals;
  for (int g : group) vals.push_back(Vec::Zero(g0.groups[g].size()));
  MarginalSampler<GaussianComponents> s(spec, GaussianComponents(g0, s2), group, vals);
  s.initialize(rng);
  s.set_u(std::vector<double>(G, 0.5));
  Stats sc;
  const int thin = 10;
  for (int t = 0; t < draws * thin; ++t) {
    s.sweep(rng, false, 2, false);
    double wsum = 0.0;
    for (int i = 0; i < N; ++i) {
      const Vec w = s.simulate_value(i, rng);
      s.set_value(i, w);
      wsum += w.sum();
    }
    if (t % thin == 0) record(sc, s.num_clusters(), s.num_shared_clusters(), s.u()[0], wsum);
  }
  EXPECT_GT(s.cross_acceptance(), 0.0);

  EXPECT_GT(ks_two_sample(mc.k, sc.k).p_value, 1e-3);
  EXPECT_GT(ks_two_sample(mc.shared, sc.shared).p_value, 1e-3);
  EXPECT_GT(ks_two_sample(mc.u1, sc.u1).p_value, 1e-3);
  EXPECT_GT(ks_two_sample(mc.w, sc.w).p_value, 1e-3);
}

}  // namespace

TEST(Geweke, MarginalSamplerGammaEqualJumps) {
  geweke_check(bivariate_gaussian(0.0, 1.0, 0.5), {0, 0, 0, 1, 1, 1}, 99);
}

// Groups seeing overlapping coordinates: complete rows and rows missing the
// second coordinate, so hyper-tied clusters share a location coordinate.
TEST(Geweke, MarginalSamplerOverlappingCoordinates) {
  const BaseMeasure g0 = missing_data_degenerate(Vec::Zero(2), Vec::Ones(2), Eigen::Matrix2d{{1.0, 0.5}, {0.5, 1.0}},
                                                 {{0, 1}, {0}});
  geweke_check(g0, {0, 0, 0, 1, 1, 1}, 7);
}

// ---- merge/split across groups ---------------------------------------------------------

namespace {

// Members stacked into one vector: every observed entry is Gaussian with
// covariance Sigma_jk between entries on coordinates j and k (plus the kernel
// variance on the diagonal).
double stacked_log_marginal(const BaseMeasure& g0, double s2, const std::vector<int>& group, const std::vector<Vec>& vals) {
  std::vector<int> coord;
  std::vector<double> x;
  for (std::size_t i = 0; i < vals.size(); ++i)
    for (std::size_t k = 0; k < g0.groups[group[i]].size(); ++k) coord.push_back(g0.groups[group[i]][k]), x.push_back(vals[i][k]);
  const Eigen::MatrixXd sigma = g0.covariance();
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd c(n, n);
  Vec m(n), xv(n);
  for (int a = 0; a < n; ++a) {
    m[a] = g0.mean[coord[a]];
    xv[a] = x[a];
    for (int b = 0; b < n; ++b) c(a, b) = sigma(coord[a], coord[b]);
  }
  // Entries of one observation share the atom; each entry adds its own noise.
  c += s2 * Eigen::MatrixXd::Identity(n, n);
  return detail::log_mvn_pdf(xv, m, c);
}

const BaseMeasure& overlap_base() {
  static const BaseMeasure g0 = missing_data_degenerate(Vec::Constant(2, 0.2), Vec{{1.0, 1.5}},
                                                        Eigen::Matrix2d{{1.0, 0.5}, {0.5, 1.0}}, {{0, 1}, {0}});
  return g0;
}

}  // namespace

TEST(CrossMove, LogMarginalMatchesStackedGaussian) {
  const auto& g0 = overlap_base();
  GaussianComponents comp(g0, Vec::Constant(2, 0.5));
  const std::vector<int> group{0, 1, 1, 0};
  const std::vector<Vec> vals{Vec{{0.3, -0.2}}, scalar(1.1), scalar(0.4), Vec{{-0.5, 0.9}}};
  auto atom = comp.empty_atom();
  for (std::size_t i = 0; i < vals.size(); ++i) comp.accumulate(atom, group[i], vals[i]);
  EXPECT_NEAR(comp.log_marginal(atom), stacked_log_marginal(g0, 0.5, group, vals), 1e-10);
  // Only the second group: the unseen coordinate is integrated out.
  auto one = comp.empty_atom();
  comp.accumulate(one, 1, scalar(1.1));
  EXPECT_NEAR(comp.log_marginal(one), stacked_log_marginal(g0, 0.5, {1}, {scalar(1.1)}), 1e-12);
  const auto both = comp.pool(atom, one);
  EXPECT_EQ(both.cnt[0], 5.0);
  EXPECT_EQ(both.cnt[1], 2.0);
}

// Two observations in groups seeing overlapping coordinates: the merge/split
// move alone is a two-state chain whose stationary law is known exactly.
TEST(CrossMove, TwoStateBalanceWithOverlappingCoordinates) {
  const auto& g0 = overlap_base();
  const auto spec = levy(LevyFamily::GammaEqualJumps, 1.2);
  const std::vector<int> group{0, 1};
  const std::vector<Vec> vals{Vec{{0.3, -0.2}}, scalar(1.1)};
  const std::vector<double> u{0.7, 0.4};
  auto lt = [&](std::vector<int> c) { return std::log(spec.theta) + log_tau(spec, std::span<const int>(c), u); };
  const double log_sep = lt({1, 0}) + lt({0, 1}) + stacked_log_marginal(g0, 0.5, {0}, {vals[0]}) +
                         stacked_log_marginal(g0, 0.5, {1}, {vals[1]});
  const double log_mer = lt({1, 1}) + stacked_log_marginal(g0, 0.5, group, vals);
  const double p_merged = 1.0 / (1.0 + std::exp(log_sep - log_mer));
  ASSERT_GT(p_merged, 0.1);
  ASSERT_LT(p_merged, 0.9);

  Rng rng(3);
  MarginalSampler<GaussianComponents> s(spec, GaussianComponents(g0, Vec::Constant(2, 0.5)), group, vals);
  s.initialize(rng);
  s.set_labels({0, 1}, rng);
  s.set_u(u);
  std::vector<double> merged;
  for (int t = 0; t < 200000; ++t) {
    s.cross_group_move(rng);
    merged.push_back(s.num_clusters() == 1 ? 1.0 : 0.0);
  }
  double mean = 0.0;
  for (double v : merged) mean += v;
  mean /= merged.size();
  EXPECT_NEAR(mean, p_merged, 4.0 * batch_means_stderr(merged)) << "exact " << p_merged;
}

// ---- blocked Gibbs ------------------------------------------------------------------------

TEST(Blocked, StickWeightsSumToOne) {
  const auto w = stick_weights({0.3, 0.5, 0.2, 0.9});
  double s = 0.0;
  for (double v : w) s += v;
  EXPECT_NEAR(s, 1.0, 1e-14);
  EXPECT_NEAR(w[0], 0.3, 1e-14);
  EXPECT_NEAR(w[3], 0.7 * 0.5 * 0.8, 1e-14);
}

TEST(Blocked, SingleAtomTruncation) {
  std::vector<int> group{0, 1, 0};
  std::vector<Vec> vals{scalar(0.0), scalar(1.0), scalar(-1.0)};
  BlockedGibbs b(1.0, {}, free_components(0.5, false), group, vals, 1);
  Rng rng(5);
  b.initialize(rng);
  b.sweep(rng);
  EXPECT_EQ(b.num_clusters(), 1);
  EXPECT_NEAR(b.weights()[0], 1.0, 1e-15);
  EXPECT_THROW(BlockedGibbs(1.0, {}, free_components(), group, vals, 0), std::invalid_argument);
}

TEST(Blocked, ConcentratesOnRepeatedValue) {
  std::vector<int> group;
  std::vector<Vec> vals;
  for (int i = 0; i < 40; ++i) {
    group.push_back(i % 2);
    vals.push_back(scalar(i % 2 ? -2.0 : 2.0));
  }
  GaussianComponents comp(bivariate_gaussian(0.0, 3.0, 0.0), Vec::Constant(2, 0.05));
  BlockedGibbs b(1.0, {}, comp, group, vals, 20);
  Rng rng(6);
  b.initialize(rng);
  for (int t = 0; t < 200; ++t) b.sweep(rng);
  EXPECT_GT(b.log_density(0, scalar(2.0)), b.log_density(0, scalar(-2.0)) + 5.0);
  EXPECT_GT(b.log_density(1, scalar(-2.0)), b.log_density(1, scalar(2.0)) + 5.0);
  for (int i = 0; i < b.num_obs(); ++i) EXPECT_TRUE(std::isfinite(b.log_pred_obs()[i]));
}

TEST(Blocked, ThetaPriorRecovered) {
  std::vector<int> group{0, 1};
  std::vector<Vec> vals{scalar(0.0), scalar(0.0)};
  BlockedGibbs b(1.0, ThetaPrior{false, 3.0, 2.0}, free_components(0.0, true), group, vals, 25);
  Rng rng(7);
  b.initialize(rng);
  std::vector<double> trace;
  for (int t = 0; t < 40000; ++t) {
    b.sweep(rng);
    if (t >= 500) trace.push_back(b.theta());
  }
  double mean = 0.0;
  for (double v : trace) mean += v;
  mean /= trace.size();
  EXPECT_NEAR(mean, 1.5, 4 * batch_means_stderr(trace) + 0.02);
}

// ---- Ferguson-Klass draw ----------------------------------------------------------------------

TEST(FergusonKlass, PriorTotalMassIsGamma) {
  const double theta = 1.5;
  const auto spec = levy(LevyFamily::GammaEqualJumps, theta);
  const auto g0 = bivariate_gaussian(0.0, 1.0, 0.3);
  Rng rng(12);
  FkContext ctx;
  ctx.truncation = 100;
  ctx.with_atoms = false;
  std::vector<double> tot;
  for (int r = 0; r < 3000; ++r) {
    const auto d = ferguson_klass_draw(spec, g0, ctx, rng);
    tot.push_back(d.total(0) + d.residual[0]);
    EXPECT_DOUBLE_EQ(d.total(0), d.total(1));
  }
  double m = 0.0, v = 0.0;
  for (double x : tot) m += x;
  m /= tot.size();
  for (double x : tot) v += (x - m) * (x - m);
  v /= tot.size() - 1;
  EXPECT_NEAR(m, theta, 4 * std::sqrt(theta / tot.size()));
  EXPECT_NEAR(v, theta, 0.15 * theta);
}

TEST(FergusonKlass, FixedJumpLaw) {
  const auto spec = levy(LevyFamily::GammaEqualJumps, 1.0);
  const auto g0 = bivariate_gaussian(0.0, 1.0, 0.3);
  Rng rng(13);
  FkContext ctx;
  ctx.u1 = 0.4;
  ctx.u2 = 0.6;
  ctx.truncation = 20;
  ctx.clusters.push_back({2, 1, {scalar(0.5), scalar(-0.5)}});
  ctx.clusters.push_back({1, 0, {scalar(1.0), Vec()}});
  double m = 0.0;
  const int R = 20000;
  for (int r = 0; r < R; ++r) {
    const auto d = ferguson_klass_draw(spec, g0, ctx, rng);
    m += d.fixed_jumps[0][0] / R;
    for (int g = 0; g < 2; ++g) {
      double s = 0.0;
      for (double p : d.parts[g]) s += p;
      ASSERT_NEAR(s, 1.0, 1e-12);
      double w = 0.0;
      for (double x : d.weights(g)) w += x;
      ASSERT_NEAR(w, 1.0, 1e-12);
    }
    ASSERT_EQ(d.fixed_atoms[1].size(), 2u);
    ASSERT_EQ(d.fixed_atoms[1][0][0], 1.0);
  }
  // Gamma(3, 1 + U1 + U2).
  EXPECT_NEAR(m, 3.0 / 2.0, 4 * std::sqrt(3.0 / 4.0 / R));
}

TEST(FergusonKlass, AdditiveOneSidedAtomsSplit) {
  const auto spec = levy(LevyFamily::AdditiveGamma, 1.0, 0.5);
  const auto g0 = bivariate_gaussian(0.0, 1.0, 0.3);
  Rng rng(14);
  FkContext ctx;
  ctx.u1 = 1.0;
  ctx.u2 = 2.0;
  ctx.truncation = 20;
  ctx.clusters.push_back({2, 0, {scalar(0.5), Vec()}});
  int idio = 0;
  const int R = 20000;
  for (int r = 0; r < R; ++r) {
    const auto d = ferguson_klass_draw(spec, g0, ctx, rng);
    idio += d.fixed_jumps[0][1] == 0.0;
  }
  // z (1 + u1)^{-2} against (1 - z) (1 + u1 + u2)^{-2}.
  const double a = std::pow(2.0, -2), b = std::pow(4.0, -2);
  const double p = a / (a + b);
  EXPECT_NEAR(static_cast<double>(idio) / R, p, 4 * std::sqrt(p * (1 - p) / R));
}

// ---- Normal-InverseGamma components ------------------------------------------------------------

TEST(Nig, PowerGaussIntegralClosedForm) {
  for (double p : {0.0, 1.0, 4.0, 7.5})
    for (double a : {0.3, 2.0, 15.0}) {
      const double expected = std::lgamma(0.5 * (p + 1)) - std::log(2.0) - 0.5 * (p + 1) * std::log(a);
      EXPECT_NEAR(log_power_gauss_integral(p, a, 0.0), expected, 1e-8);
    }
  // b != 0 against direct quadrature on a wide interval.
  const double p = 3.0, a = 1.5, b = -2.0;
  const auto r = integrate([&](double t) { return std::pow(t, p) * std::exp(-a * t * t + b * t); }, 0.0, 40.0);
  EXPECT_NEAR(log_power_gauss_integral(p, a, b), std::log(r.value), 1e-8);
}

TEST(Nig, CompanionPredictive) {
  NigParams prm;
  prm.lambda1 = 0.5;
  prm.lambda2 = 2.0;
  prm.alpha1 = 3.0;
  prm.beta1 = 2.0;
  NigAtom at;
  at.loc = {0.0, 1.3};
  at.var = {0.0, 0.7};
  at.cnt = {0.0, 1.0};
  {
    NigComponents comp(normal_inv_gamma_pair(0.2, -0.1, 0.0, prm));
    for (double w : {-2.0, 0.0, 0.7, 3.0})
      EXPECT_NEAR(comp.log_pred(at, 0, scalar(w)), comp.log_pred_new(0, scalar(w)), 1e-8);
  }
  NigComponents comp(normal_inv_gamma_pair(0.2, -0.1, 0.8, prm));
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-9;
  const auto tot = integrate([&](double w) { return std::exp(comp.log_pred(at, 0, scalar(w))); }, -60.0, 60.0, cfg);
  EXPECT_NEAR(tot.value, 1.0, 1e-6);
  const auto mean = integrate([&](double w) { return w * std::exp(comp.log_pred(at, 0, scalar(w))); }, -60.0, 60.0, cfg);
  // E[loc | other side] = m + r sqrt(lambda2) (loc2 - m2) / (sqrt(var2) sqrt(lambda1)) E[sqrt(var)].
  const double s = 0.8 * std::sqrt(2.0) * 1.4 / (std::sqrt(0.7) * std::sqrt(0.5));
  const double e_sqrt_v = std::sqrt(prm.beta1) * std::exp(std::lgamma(prm.alpha1 - 0.5) - std::lgamma(prm.alpha1));
  EXPECT_NEAR(mean.value, 0.2 + s * e_sqrt_v, 1e-5);
}

TEST(Nig, SamplerRunsAndKeepsFiniteState) {
  NigParams prm;
  NigComponents comp(normal_inv_gamma_pair(0.0, 0.0, 0.3, prm), CorrPrior{false, 0.2});
  std::vector<int> group;
  std::vector<Vec> vals;
  Rng rng(50);
  for (int i = 0; i < 30; ++i) {
    group.push_back(i % 2);
    vals.push_back(scalar((i % 3 == 0 ? 2.0 : -1.0) * (i % 2 ? -1.0 : 1.0) + 0.3 * std_normal(rng)));
  }
  Hyperpriors hp;
  hp.theta.fixed = false;
  hp.z.fixed = false;
  MarginalSampler<NigComponents> s(levy(LevyFamily::AdditiveGamma, 1.0, 0.5), comp, group, vals, hp);
  s.initialize(rng);
  for (int t = 0; t < 300; ++t) {
    s.sweep(rng, true);
    for (double v : s.log_pred_obs()) ASSERT_TRUE(std::isfinite(v));
    ASSERT_GT(s.spec().theta, 0.0);
    ASSERT_LT(std::abs(s.components().rho0()), 1.0);
  }
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-8;
  const auto r = integrate([&](double w) { return std::exp(s.log_predictive_density(0, scalar(w))); }, -1000.0, 1000.0, cfg);
  EXPECT_NEAR(r.value, 1.0, 1e-5);
}
