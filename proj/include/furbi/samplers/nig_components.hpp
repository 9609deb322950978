#pragma once

// Gaussian kernel with unknown location and variance per cluster under a
// Normal-InverseGamma base on one or two groups. In the two-group case the
// two locations are correlated given the variances (correlation rho0); the
// variances are independent.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "furbi/base_measure.hpp"
#include "furbi/quadrature.hpp"
#include "furbi/random.hpp"
#include "furbi/samplers/common.hpp"
#include "furbi/samplers/gaussian_components.hpp"

namespace furbi {

/// log of int_0^inf t^p exp(-a t^2 + b t) dt, p >= 0, a > 0.
inline double log_power_gauss_integral(double p, double a, double b) {
  if (!(p >= 0.0) || !(a > 0.0)) throw std::domain_error("log_power_gauss_integral: need p >= 0, a > 0");
  auto h = [&](double t) { return (p > 0.0 ? p * std::log(t) : 0.0) - a * t * t + b * t; };
  const double mode = (b + std::sqrt(b * b + 8.0 * a * p)) / (4.0 * a);
  const double hm = mode > 0.0 ? h(mode) : 0.0;
  // h(t) - h(mode) <= -a (t - mode)^2 to the right of the mode.
  const double hi = mode + 12.0 / std::sqrt(a);
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-300;
  const auto r = integrate([&](double t) { return t > 0.0 ? std::exp(h(t) - hm) : (p > 0.0 ? 0.0 : 1.0); }, 0.0, hi, cfg);
  return hm + std::log(r.value);
}

struct NigAtom {
  std::array<double, 2> loc{};
  std::array<double, 2> var{};
  std::array<double, 2> cnt{};
  std::array<double, 2> sum{};
  std::array<double, 2> sumsq{};

  bool materialized(int g) const { return cnt[g] > 0.0; }
};

class NigComponents {
 public:
  using Atom = NigAtom;
  using Value = Eigen::VectorXd;

  explicit NigComponents(BaseMeasure g0, CorrPrior corr_prior = {}) : g0_(std::move(g0)), corr_prior_(corr_prior) {
    g0_.validate();
    if (g0_.family != BaseFamily::NormalInvGammaPair)
      throw std::invalid_argument("NigComponents: base measure must be Normal-InverseGamma");
    if (g0_.num_groups() > 2) throw std::invalid_argument("NigComponents: at most two groups");
    step_.log_step = std::log(corr_prior_.step);
    step_.max_log_step = std::log(2.0);
  }

  int num_groups() const { return g0_.num_groups(); }
  int value_size(int) const { return 1; }
  std::vector<int> coords(int g) const { return {g}; }
  int dim() const { return num_groups(); }
  const BaseMeasure& base() const { return g0_; }
  double rho0() const { return num_groups() == 2 ? g0_.corr(0, 1) : 0.0; }

  void set_rho0(double r) {
    if (num_groups() != 2) return;
    g0_.corr(0, 1) = g0_.corr(1, 0) = r;
  }

  Atom empty_atom() const { return Atom{}; }

  double log_kernel(const Atom& a, int g, const Value& w) const { return log_normal_pdf(w[0], a.loc[g], a.var[g]); }

  double log_pred(const Atom& a, int g, const Value& w) const {
    if (a.materialized(g)) return log_normal_pdf(w[0], a.loc[g], a.var[g]);
    if (num_groups() == 2 && a.materialized(1 - g)) return log_pred_companion(a, g, w[0]);
    return log_pred_new(g, w);
  }

  /// Student-t prior predictive.
  double log_pred_new(int g, const Value& w) const {
    const auto [m, lam, al, be] = params(g);
    const double nu = 2.0 * al;
    const double s2 = be * (lam + 1.0) / (lam * al);
    const double z = (w[0] - m) * (w[0] - m) / (nu * s2);
    return log_gamma(0.5 * (nu + 1.0)) - log_gamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi * s2) -
           0.5 * (nu + 1.0) * std::log1p(z);
  }

  void add(Atom& a, int g, const Value& w, Rng& rng) const {
    const double x = w[0];
    if (!a.materialized(g)) {
      if (num_groups() == 2 && a.materialized(1 - g)) {
        const Companion c = companion(a, g, x);
        const double t = sample_power_gauss(rng, c.p, c.a, c.b);
        const double v = 1.0 / (t * t);
        const double prior_mean = c.m + c.s / t;
        a.var[g] = v;
        a.loc[g] = (prior_mean + c.resid * x) / (1.0 + c.resid) + std::sqrt(v * c.resid / (1.0 + c.resid)) * std_normal(rng);
      } else {
        draw_conjugate(a, g, 1.0, x, 0.0, rng);
      }
    }
    a.cnt[g] += 1.0;
    a.sum[g] += x;
    a.sumsq[g] += x * x;
  }

  void remove(Atom& a, int g, const Value& w) const {
    a.cnt[g] -= 1.0;
    if (a.cnt[g] <= 0.0) {
      a.cnt[g] = a.sum[g] = a.sumsq[g] = 0.0;
    } else {
      a.sum[g] -= w[0];
      a.sumsq[g] -= w[0] * w[0];
    }
  }

  void replace(Atom& a, int g, const Value& old_w, const Value& new_w) const {
    a.sum[g] += new_w[0] - old_w[0];
    a.sumsq[g] += new_w[0] * new_w[0] - old_w[0] * old_w[0];
  }

  void refresh(Atom& a, Rng& rng) const {
    const bool m0 = a.materialized(0), m1 = num_groups() == 2 && a.materialized(1);
    if (m0 && m1) {
      refresh_joint(a, rng);
      return;
    }
    for (int g = 0; g < num_groups(); ++g) {
      if (!a.materialized(g)) continue;
      const double n = a.cnt[g], xbar = a.sum[g] / n;
      draw_conjugate(a, g, n, xbar, std::max(0.0, a.sumsq[g] - n * xbar * xbar), rng);
    }
  }

  Atom combine(const Atom& a, const Atom& b) const {
    Atom out = a;
    for (int g = 0; g < 2; ++g)
      if (b.materialized(g)) {
        out.loc[g] = b.loc[g];
        out.var[g] = b.var[g];
        out.cnt[g] = b.cnt[g];
        out.sum[g] = b.sum[g];
        out.sumsq[g] = b.sumsq[g];
      }
    return out;
  }

  Atom restrict(const Atom& a, const std::vector<bool>& keep) const {
    Atom out{};
    for (int g = 0; g < num_groups(); ++g)
      if (keep[g]) {
        out.loc[g] = a.loc[g];
        out.var[g] = a.var[g];
        out.cnt[g] = a.cnt[g];
        out.sum[g] = a.sum[g];
        out.sumsq[g] = a.sumsq[g];
      }
    return out;
  }

  double log_prior(const Atom& a) const {
    const bool m0 = a.materialized(0), m1 = num_groups() == 2 && a.materialized(1);
    if (m0 && m1) return log_g0_density(g0_, Atom2(a));
    double s = 0.0;
    for (int g = 0; g < num_groups(); ++g)
      if (a.materialized(g)) s += log_p0_density(g0_, g, Eigen::Vector2d(a.loc[g], a.var[g]));
    return s;
  }

  Value simulate(const Atom& a, int g, Rng& rng) const {
    return Eigen::VectorXd::Constant(1, a.loc[g] + std::sqrt(a.var[g]) * std_normal(rng));
  }

  void update_hyper(std::span<Atom* const> atoms, Rng& rng, bool adapt) {
    if (corr_prior_.fixed || num_groups() != 2) return;
    auto total = [&](double r) {
      const double keep = g0_.corr(0, 1);
      g0_.corr(0, 1) = g0_.corr(1, 0) = r;
      double s = 0.0;
      for (const Atom* a : atoms)
        if (a->materialized(0) && a->materialized(1)) s += log_g0_density(g0_, Atom2(*a));
      g0_.corr(0, 1) = g0_.corr(1, 0) = keep;
      return s;
    };
    const double r = g0_.corr(0, 1);
    const double prop = reflect(r + step_.step() * std_normal(rng), -1.0, 1.0);
    bool accept = false;
    if (std::abs(prop) < 1.0 - 1e-9 && std::log(uniform01(rng)) < total(prop) - total(r)) {
      set_rho0(prop);
      accept = true;
    }
    step_.record(accept, adapt);
  }

  std::vector<std::pair<std::string, double>> hyper_values() const {
    if (num_groups() != 2) return {};
    return {{"rho0", g0_.corr(0, 1)}};
  }

 private:
  struct GroupParams {
    double m, lambda, alpha, beta;
  };

  GroupParams params(int g) const {
    const auto& p = *g0_.nig;
    return g == 0 ? GroupParams{g0_.mean[0], p.lambda1, p.alpha1, p.beta1}
                  : GroupParams{g0_.mean[1], p.lambda2, p.alpha2, p.beta2};
  }

  ::furbi::Atom Atom2(const NigAtom& a) const {
    return {Eigen::Vector2d(a.loc[0], a.var[0]), Eigen::Vector2d(a.loc[1], a.var[1])};
  }

  /// Law of group g's (location, variance) given the other group's atom:
  /// var ~ IG(alpha, beta), loc | var ~ N(m + s sqrt(var), resid var). For a
  /// value w the predictive and the posterior of t = var^{-1/2} both involve
  /// t^p exp(-a t^2 + b t).
  struct Companion {
    double m, s, resid, alpha, beta;
    double p, a, b;
  };

  Companion companion(const NigAtom& at, int g, double w) const {
    const int h = 1 - g;
    const auto pg = params(g), ph = params(h);
    const double r = g0_.corr(0, 1);
    Companion c;
    c.m = pg.m;
    c.s = r * std::sqrt(ph.lambda) * (at.loc[h] - ph.m) / (std::sqrt(at.var[h]) * std::sqrt(pg.lambda));
    c.resid = (1.0 - r * r) / pg.lambda;
    c.alpha = pg.alpha;
    c.beta = pg.beta;
    const double k = c.resid + 1.0;
    c.p = 2.0 * pg.alpha;
    c.a = pg.beta + (w - pg.m) * (w - pg.m) / (2.0 * k);
    c.b = c.s * (w - pg.m) / k;
    return c;
  }

  double log_pred_companion(const NigAtom& at, int g, double w) const {
    const Companion c = companion(at, g, w);
    const double k = c.resid + 1.0;
    return std::numbers::ln2 + c.alpha * std::log(c.beta) - log_gamma(c.alpha) - 0.5 * std::log(2.0 * std::numbers::pi * k) -
           c.s * c.s / (2.0 * k) + log_power_gauss_integral(c.p, c.a, c.b);
  }

  /// Conjugate Normal-InverseGamma draw for group g from n observations with
  /// mean xbar and centred sum of squares ss.
  void draw_conjugate(NigAtom& a, int g, double n, double xbar, double ss, Rng& rng) const {
    const auto [m, lam, al, be] = params(g);
    const double lam_n = lam + n;
    const double m_n = (lam * m + n * xbar) / lam_n;
    const double al_n = al + 0.5 * n;
    const double be_n = be + 0.5 * ss + 0.5 * lam * n * (xbar - m) * (xbar - m) / lam_n;
    const double v = 1.0 / gamma_draw(rng, al_n, be_n);
    a.var[g] = v;
    a.loc[g] = m_n + std::sqrt(v / lam_n) * std_normal(rng);
  }

  /// One Gibbs pass over a hyper-tied atom: locations jointly, then each variance.
  void refresh_joint(NigAtom& a, Rng& rng) const {
    const auto p0 = params(0), p1 = params(1);
    const double r = g0_.corr(0, 1);
    {
      const Eigen::Matrix2d c = detail::nig_cov(g0_, a.var[0], a.var[1]);
      const Eigen::Matrix2d cinv = c.inverse();
      Eigen::Matrix2d prec = cinv;
      Eigen::Vector2d h = cinv * Eigen::Vector2d(p0.m, p1.m);
      for (int g = 0; g < 2; ++g) {
        prec(g, g) += a.cnt[g] / a.var[g];
        h[g] += a.sum[g] / a.var[g];
      }
      const Eigen::VectorXd draw = detail::draw_canonical(rng, prec, h);
      a.loc[0] = draw[0];
      a.loc[1] = draw[1];
    }
    const double one_m_r2 = std::max(1.0 - r * r, 1e-12);
    for (int g = 0; g < 2; ++g) {
      const int h = 1 - g;
      const auto pg = g == 0 ? p0 : p1, ph = g == 0 ? p1 : p0;
      const double d = (a.loc[g] - pg.m) * std::sqrt(pg.lambda);
      const double e = (a.loc[h] - ph.m) * std::sqrt(ph.lambda) / std::sqrt(a.var[h]);
      const double ss = std::max(0.0, a.sumsq[g] - 2.0 * a.loc[g] * a.sum[g] + a.cnt[g] * a.loc[g] * a.loc[g]);
      const double t = sample_power_gauss(rng, 2.0 * pg.alpha + a.cnt[g], pg.beta + 0.5 * ss + d * d / (2.0 * one_m_r2),
                                          r * d * e / one_m_r2);
      a.var[g] = 1.0 / (t * t);
    }
  }

  BaseMeasure g0_;
  CorrPrior corr_prior_;
  AdaptiveStep step_;
};

}  // namespace furbi
