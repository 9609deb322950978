#pragma once

// Tie and hyper-tie probabilities (beta, gamma) and the correlations they
// induce, in closed form, by quadrature, and by Monte Carlo simulation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "furbi/base_measure.hpp"
#include "furbi/bvn.hpp"
#include "furbi/hypergeometric.hpp"
#include "furbi/levy.hpp"
#include "furbi/quadrature.hpp"
#include "furbi/random.hpp"

namespace furbi {

enum class DependenceMethod { ClosedForm, Quadrature, MonteCarlo };

struct DependenceReport {
  double beta = 0.0;
  double gamma = 0.0;
  double rho0 = 0.0;
  double corr_within = 0.0;
  double corr_across = 0.0;
  DependenceMethod method = DependenceMethod::ClosedForm;
  std::optional<double> mc_stderr;  ///< standard error of gamma (Monte Carlo only)
  std::optional<double> beta_stderr;
  std::optional<double> across_stderr;
  std::optional<double> cross_tie;  ///< P(X = Y) for one draw per group (Monte Carlo only)
};

/// beta = -int_0^inf u psi''(u) exp(-psi(u)) du.
inline double beta_numeric(const LevySpec& spec, const QuadratureConfig& cfg = {}) {
  spec.validate();
  return integrate_half_line([&](double u) { return -u * psi_second(spec, u) * std::exp(-psi(spec, u)); }, cfg)
      .value;
}

inline double beta_closed(const LevySpec& spec) {
  spec.validate();
  if (spec.family == LevyFamily::InvGaussEqualJumps) {
    QuadratureConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-15;
    cfg.max_subdivisions = 1000;
    return beta_numeric(spec, cfg);
  }
  return 1.0 / (1.0 + spec.theta);
}

inline double gamma_closed(const LevySpec& spec) {
  spec.validate();
  if (spec.family != LevyFamily::AdditiveGamma) return beta_closed(spec);
  const double t = spec.theta, z = spec.z;
  if (z == 1.0) return 0.0;
  return (1.0 - z) * hyp3f2_unit(t - t * z + 2.0, 1.0, 1.0, t + 2.0, t + 2.0) * t / ((1.0 + t) * (1.0 + t));
}

/// gamma = -int int d^2 psi_b / du1 du2 * exp(-psi_b(u1, u2)) du1 du2.
/// For gamma-type intensities the integrand decays only like u^{-2-theta}, so
/// the half-line map is raised to a power of at least 2/theta to keep the
/// mapped integrand bounded.
inline double gamma_numeric(const LevySpec& spec, QuadratureConfig cfg = {}) {
  spec.validate();
  if (spec.family != LevyFamily::InvGaussEqualJumps) cfg.map_power = std::max(cfg.map_power, 2.0 / spec.theta);
  return integrate_posneg_2d(
             [&](double u1, double u2) { return -psi_b_mixed(spec, u1, u2) * std::exp(-psi_b(spec, u1, u2)); }, cfg)
      .value;
}

/// Correlation between the first coordinates of the first two groups' atoms under G0.
inline double base_cross_correlation(const BaseMeasure& g0) {
  if (g0.family == BaseFamily::DiagonalDegenerate) return 1.0;
  if (g0.family == BaseFamily::NormalInvGammaPair) {
    // corr(x, y) = rho0 E[s_w] E[s_v] / sqrt(E[s_w^2] E[s_v^2]) with s^2 ~ InvGamma(alpha, beta).
    const auto& p = *g0.nig;
    if (!(p.alpha1 > 1.0 && p.alpha2 > 1.0))
      throw std::domain_error("base_cross_correlation: NIG needs alpha > 1 for finite variances");
    auto ratio = [](double a) { return std::exp(log_gamma(a - 0.5) - log_gamma(a)) * std::sqrt(a - 1.0); };
    return g0.corr(0, 1) * ratio(p.alpha1) * ratio(p.alpha2);
  }
  const int a = g0.groups.at(0).at(0), b = g0.groups.at(1).at(0);
  return g0.corr(a, b);
}

struct CorrPair {
  double within = 0.0;
  double across = 0.0;
};

/// corr(X_i, X_j) = beta and corr(X_i, Y_j) = gamma * rho0 for observations drawn
/// directly from the normalized measures.
inline CorrPair corr_observables(const LevySpec& spec, const BaseMeasure& g0) {
  return {beta_closed(spec), gamma_closed(spec) * base_cross_correlation(g0)};
}

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// corr(p1(A), p2(B)).
inline double corr_measures(const LevySpec& spec, const BaseMeasure& g0, Interval A, Interval B) {
  if (g0.family == BaseFamily::NormalInvGammaPair)
    throw std::invalid_argument("corr_measures: only Gaussian base measures are supported");
  const int ca = g0.groups.at(0).at(0), cb = g0.groups.at(1).at(0);
  const double ma = g0.mean[ca], sa = g0.scale[ca], mb = g0.mean[cb], sb = g0.scale[cb];
  auto std_a = [&](double v) { return (v - ma) / sa; };
  auto std_b = [&](double v) { return (v - mb) / sb; };
  const double pa = normal_cdf(std_a(A.hi)) - normal_cdf(std_a(A.lo));
  const double pb = normal_cdf(std_b(B.hi)) - normal_cdf(std_b(B.lo));
  if (!(pa > 0.0 && pa < 1.0 && pb > 0.0 && pb < 1.0))
    throw std::domain_error("corr_measures: sets must have P0 mass strictly between 0 and 1");
  double gab;
  if (ca == cb) {
    const Interval I{std::max(A.lo, B.lo), std::min(A.hi, B.hi)};
    gab = I.hi > I.lo ? normal_cdf(std_a(I.hi)) - normal_cdf(std_a(I.lo)) : 0.0;
  } else {
    const double r = g0.corr(ca, cb);
    auto F = [&](double x, double y) { return bvn_cdf(std_a(x), std_b(y), r); };
    gab = F(A.hi, B.hi) - F(A.lo, B.hi) - F(A.hi, B.lo) + F(A.lo, B.lo);
  }
  return gamma_closed(spec) / beta_closed(spec) * (gab - pa * pb) / std::sqrt(pa * (1 - pa) * pb * (1 - pb));
}

struct HdpDependence {
  double beta = 0.0;
  double gamma = 0.0;
};

/// Hierarchical Dirichlet process with concentrations theta (groups) and theta0 (root).
inline HdpDependence hdp_dependence(double theta, double theta0) {
  if (!(theta > 0.0 && theta0 > 0.0)) throw std::invalid_argument("hdp_dependence: parameters must be positive");
  return {1.0 - theta * theta0 / ((1.0 + theta) * (1.0 + theta0)), 1.0 / (1.0 + theta0)};
}

inline DependenceReport dependence_report(const LevySpec& spec, const BaseMeasure& g0) {
  DependenceReport r;
  r.beta = beta_closed(spec);
  r.gamma = gamma_closed(spec);
  r.rho0 = base_cross_correlation(g0);
  r.corr_within = r.beta;
  r.corr_across = r.gamma * r.rho0;
  r.method = spec.family == LevyFamily::InvGaussEqualJumps ? DependenceMethod::Quadrature : DependenceMethod::ClosedForm;
  return r;
}

// ---- Monte Carlo ----------------------------------------------------------------

namespace detail {

/// Stick-breaking weights of a Dirichlet process with the given mass, truncated
/// after n atoms (the last stick takes the remainder).
inline std::vector<double> dp_sticks(Rng& rng, double mass, int n) {
  std::vector<double> w(n);
  double rest = 1.0;
  for (int k = 0; k + 1 < n; ++k) {
    const double v = beta_draw(rng, 1.0, mass);
    w[k] = rest * v;
    rest *= 1.0 - v;
  }
  w[n - 1] = rest;
  return w;
}

inline int dp_truncation(double mass) {
  // (mass / (1 + mass))^N < 1e-6
  return std::max(10, static_cast<int>(std::ceil(std::log(1e-6) / std::log(mass / (1.0 + mass)))) + 1);
}

/// Normalized inverse-Gaussian CRM weights via Ferguson-Klass with `n` jumps;
/// the expected mass of the remaining jumps is added to the normalizer.
inline std::vector<double> nig_weights(Rng& rng, double theta, int n) {
  const JumpIntensity nu{JumpShape::InvGauss, theta, 0.5};
  std::vector<double> w(n);
  double xi = 0.0, total = 0.0;
  for (int k = 0; k < n; ++k) {
    xi += exponential_draw(rng, 1.0);
    w[k] = inverse_tail_mass(nu, xi, k > 0 ? w[k - 1] : 0.0);
    total += w[k];
  }
  total += residual_mass(nu, w[n - 1]);
  for (double& v : w) v /= total;
  return w;
}

struct CommonDraw {
  std::vector<double> p1, p2;        ///< weights on shared atoms
  std::vector<double> idio1, idio2;  ///< weights on group-specific atoms
};

inline CommonDraw draw_weights(const LevySpec& spec, Rng& rng, int n_atoms) {
  CommonDraw d;
  if (spec.family == LevyFamily::InvGaussEqualJumps) {
    d.p1 = nig_weights(rng, spec.theta, n_atoms > 0 ? n_atoms : 2000);
    d.p2 = d.p1;
    return d;
  }
  const double z = spec.family == LevyFamily::AdditiveGamma ? spec.z : 0.0;
  const double mc = spec.theta * (1.0 - z), mi = spec.theta * z;
  auto trunc = [&](double mass) { return n_atoms > 0 ? n_atoms : dp_truncation(mass); };
  std::vector<double> common = mc > 0 ? dp_sticks(rng, mc, trunc(mc)) : std::vector<double>{};
  if (mi == 0.0) {
    d.p1 = d.p2 = common;
    return d;
  }
  // Total masses of the gamma CRM components decide the mixing proportions.
  const double tc = mc > 0 ? gamma_draw(rng, mc, 1.0) : 0.0;
  const double t1 = gamma_draw(rng, mi, 1.0), t2 = gamma_draw(rng, mi, 1.0);
  const double w1 = tc / (tc + t1), w2 = tc / (tc + t2);
  d.p1.resize(common.size());
  d.p2.resize(common.size());
  for (std::size_t k = 0; k < common.size(); ++k) {
    d.p1[k] = w1 * common[k];
    d.p2[k] = w2 * common[k];
  }
  d.idio1 = dp_sticks(rng, mi, trunc(mi));
  d.idio2 = dp_sticks(rng, mi, trunc(mi));
  for (double& v : d.idio1) v *= 1.0 - w1;
  for (double& v : d.idio2) v *= 1.0 - w2;
  return d;
}

inline std::size_t draw_index(Rng& rng, const std::vector<double>& a, const std::vector<double>& b) {
  double u = uniform01(rng);
  for (std::size_t k = 0; k < a.size(); ++k) {
    u -= a[k];
    if (u <= 0) return k;
  }
  for (std::size_t k = 0; k < b.size(); ++k) {
    u -= b[k];
    if (u <= 0) return a.size() + k;
  }
  return a.size() + b.size() - 1;
}

}  // namespace detail

/// Monte Carlo estimates of beta, gamma and the cross-correlation of one
/// observation per group, from n_reps independent draws of the pair of
/// random probability measures. beta and gamma are Rao-Blackwellized
/// (sum of squared weights, sum of products of shared weights); the
/// cross-correlation uses one sampled observation per group and replicate.
/// n_atoms <= 0 picks the truncation automatically.
inline DependenceReport mc_dependence_oracle(const LevySpec& spec, const BaseMeasure& g0, int n_atoms, int n_reps,
                                             Rng& rng) {
  spec.validate();
  g0.validate();
  if (n_reps < 100) throw std::invalid_argument("mc_dependence_oracle: need at least 100 replicates");
  std::vector<double> b(n_reps), gm(n_reps), tie(n_reps), xs(n_reps), ys(n_reps);
  for (int r = 0; r < n_reps; ++r) {
    const auto d = detail::draw_weights(spec, rng, n_atoms);
    double sb = 0.0, sg = 0.0;
    for (std::size_t k = 0; k < d.p1.size(); ++k) {
      sb += d.p1[k] * d.p1[k];
      sg += d.p1[k] * d.p2[k];
    }
    for (double v : d.idio1) sb += v * v;
    b[r] = sb;
    gm[r] = sg;
    // One observation from each measure.
    const std::size_t i = detail::draw_index(rng, d.p1, d.idio1);
    const std::size_t j = detail::draw_index(rng, d.p2, d.idio2);
    if (i == j && i < d.p1.size()) {
      const Atom a = sample_pair(g0, rng);
      xs[r] = a[0][0];
      ys[r] = a[1][0];
    } else {
      xs[r] = sample_pair(g0, rng)[0][0];
      ys[r] = sample_pair(g0, rng)[1][0];
    }
    tie[r] = xs[r] == ys[r] ? 1.0 : 0.0;
  }
  auto mean_se = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, std::sqrt(s / (v.size() - 1) / v.size())};
  };
  auto corr = [](const double* x, const double* y, int n) {
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
  };
  DependenceReport rep;
  rep.method = DependenceMethod::MonteCarlo;
  auto [mb, sb] = mean_se(b);
  auto [mg, sg] = mean_se(gm);
  rep.beta = mb;
  rep.beta_stderr = sb;
  rep.gamma = mg;
  rep.mc_stderr = sg;
  rep.cross_tie = mean_se(tie).first;
  rep.rho0 = base_cross_correlation(g0);
  rep.corr_within = mb;
  rep.corr_across = corr(xs.data(), ys.data(), n_reps);
  // Standard error of the correlation from 50 batches.
  constexpr int kBatches = 50;
  const int bs = n_reps / kBatches;
  std::vector<double> bc(kBatches);
  for (int k = 0; k < kBatches; ++k) bc[k] = corr(xs.data() + k * bs, ys.data() + k * bs, bs);
  rep.across_stderr = mean_se(bc).second;
  return rep;
}

}  // namespace furbi
