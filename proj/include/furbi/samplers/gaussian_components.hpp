#pragma once

// Conjugate Gaussian components for the mixture samplers.
//
// Each cluster carries one latent vector mu ~ N(mean, Sigma) from G0; an
// observation of group g is N(mu restricted to S_g, diag(sigma^2)). Only the
// coordinates seen by at least one member are materialized; the others are
// integrated out and drawn from their conditional law when a member that
// sees them arrives.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "furbi/base_measure.hpp"
#include "furbi/random.hpp"
#include "furbi/samplers/common.hpp"

namespace furbi {

struct GaussAtom {
  Eigen::VectorXd mu;
  Eigen::VectorXd cnt;  ///< members observing each coordinate
  Eigen::VectorXd sum;
  Eigen::VectorXd sumsq;

  bool materialized(int j) const { return cnt[j] > 0.0; }
};

namespace detail {

inline std::vector<int> coords_where(const Eigen::VectorXd& cnt, bool positive) {
  std::vector<int> out;
  for (int j = 0; j < cnt.size(); ++j)
    if ((cnt[j] > 0.0) == positive) out.push_back(j);
  return out;
}

inline Eigen::MatrixXd sub(const Eigen::MatrixXd& m, const std::vector<int>& r, const std::vector<int>& c) {
  Eigen::MatrixXd out(r.size(), c.size());
  for (std::size_t a = 0; a < r.size(); ++a)
    for (std::size_t b = 0; b < c.size(); ++b) out(a, b) = m(r[a], c[b]);
  return out;
}

inline Eigen::VectorXd sub(const Eigen::VectorXd& v, const std::vector<int>& r) {
  Eigen::VectorXd out(r.size());
  for (std::size_t a = 0; a < r.size(); ++a) out[a] = v[r[a]];
  return out;
}

/// Draw from N(P^{-1} h, P^{-1}) given the precision P.
inline Eigen::VectorXd draw_canonical(Rng& rng, const Eigen::MatrixXd& prec, const Eigen::VectorXd& h) {
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) throw std::domain_error("draw_canonical: precision not positive definite");
  Eigen::VectorXd z(h.size());
  for (int i = 0; i < z.size(); ++i) z[i] = std_normal(rng);
  const Eigen::VectorXd mean = llt.solve(h);
  return mean + llt.matrixU().solve(z);
}

inline double log_mvn_llt(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  double logdet = 0.0;
  for (int i = 0; i < x.size(); ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
  return -0.5 * (x.size() * std::log(2.0 * std::numbers::pi) + logdet + z.squaredNorm());
}

}  // namespace detail

class GaussianComponents {
 public:
  using Atom = GaussAtom;
  using Value = Eigen::VectorXd;

  GaussianComponents(BaseMeasure g0, Eigen::VectorXd kernel_var, CorrPrior corr_prior = {},
                     VariancePrior var_prior = {}, bool likelihood_free = false)
      : g0_(std::move(g0)), s2_(std::move(kernel_var)), corr_prior_(corr_prior), var_prior_(var_prior),
        likelihood_free_(likelihood_free) {
    g0_.validate();
    if (g0_.family == BaseFamily::NormalInvGammaPair)
      throw std::invalid_argument("GaussianComponents: Normal-InverseGamma base needs NigComponents");
    if (s2_.size() != g0_.latent_dim()) throw std::invalid_argument("GaussianComponents: one kernel variance per latent coordinate");
    for (int j = 0; j < s2_.size(); ++j)
      if (!(s2_[j] > 0.0)) throw std::invalid_argument("GaussianComponents: kernel variances must be positive");
    if (!corr_prior_.fixed)
      for (int i = 0; i < g0_.latent_dim(); ++i)
        for (int j = i + 1; j < g0_.latent_dim(); ++j) {
          free_pairs_.emplace_back(i, j);
          corr_steps_.push_back(AdaptiveStep{std::log(corr_prior_.step)});
          corr_steps_.back().max_log_step = std::log(2.0);
        }
    var_steps_.assign(s2_.size(), AdaptiveStep{std::log(0.2)});
    rebuild();
  }

  int num_groups() const { return g0_.num_groups(); }
  int dim() const { return g0_.latent_dim(); }
  int value_size(int g) const { return static_cast<int>(g0_.groups[g].size()); }
  const std::vector<int>& coords(int g) const { return g0_.groups[g]; }
  const BaseMeasure& base() const { return g0_; }
  const Eigen::VectorXd& kernel_var() const { return s2_; }
  bool likelihood_free() const { return likelihood_free_; }

  void set_corr(const Eigen::MatrixXd& corr) {
    g0_.corr = corr;
    rebuild();
  }
  void set_kernel_var(const Eigen::VectorXd& s2) {
    s2_ = s2;
    rebuild();
  }

  Atom empty_atom() const {
    const int d = dim();
    return Atom{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  }

  /// Kernel density with every coordinate of S_g taken from mu.
  double log_kernel(const Atom& a, int g, const Value& w) const {
    if (likelihood_free_) return 0.0;
    const auto& S = g0_.groups[g];
    double lp = 0.0;
    for (std::size_t k = 0; k < S.size(); ++k) lp += log_normal_pdf(w[k], a.mu[S[k]], s2_[S[k]]);
    return lp;
  }

  /// log predictive density of w under cluster `a`, integrating the
  /// coordinates of S_g that are not materialized.
  double log_pred(const Atom& a, int g, const Value& w) const {
    if (likelihood_free_) return 0.0;
    const auto& S = g0_.groups[g];
    double lp = 0.0;
    std::vector<int> free_k;
    for (std::size_t k = 0; k < S.size(); ++k) {
      if (a.materialized(S[k])) lp += log_normal_pdf(w[k], a.mu[S[k]], s2_[S[k]]);
      else free_k.push_back(static_cast<int>(k));
    }
    if (free_k.empty()) return lp;
    if (free_k.size() == S.size() && detail::coords_where(a.cnt, true).empty()) return lp + log_pred_new(g, w);
    auto [m, c] = conditional_of(a, S, free_k);
    Eigen::VectorXd wb(free_k.size());
    for (std::size_t b = 0; b < free_k.size(); ++b) {
      wb[b] = w[free_k[b]];
      c(b, b) += s2_[S[free_k[b]]];
    }
    return lp + detail::log_mvn_pdf(wb, m, c);
  }

  /// Prior predictive of a new cluster.
  double log_pred_new(int g, const Value& w) const {
    if (likelihood_free_) return 0.0;
    return detail::log_mvn_llt(w, new_mean_[g], new_llt_[g]);
  }

  /// Adds w to the cluster, first drawing any unmaterialized coordinate of
  /// S_g from its law given the materialized ones and w.
  void add(Atom& a, int g, const Value& w, Rng& rng) const {
    const auto& S = g0_.groups[g];
    std::vector<int> free_k;
    for (std::size_t k = 0; k < S.size(); ++k)
      if (!a.materialized(S[k])) free_k.push_back(static_cast<int>(k));
    if (!free_k.empty()) {
      auto [m, c] = conditional_of(a, S, free_k);
      Eigen::VectorXd draw;
      if (likelihood_free_) {
        draw = detail::mvn_draw(rng, m, c);
      } else {
        const Eigen::MatrixXd cinv = c.inverse();
        Eigen::MatrixXd prec = cinv;
        Eigen::VectorXd h = cinv * m;
        for (std::size_t b = 0; b < free_k.size(); ++b) {
          const int j = S[free_k[b]];
          prec(b, b) += 1.0 / s2_[j];
          h[b] += w[free_k[b]] / s2_[j];
        }
        draw = detail::draw_canonical(rng, prec, h);
      }
      for (std::size_t b = 0; b < free_k.size(); ++b) a.mu[S[free_k[b]]] = draw[b];
    }
    for (std::size_t k = 0; k < S.size(); ++k) {
      a.cnt[S[k]] += 1.0;
      a.sum[S[k]] += w[k];
      a.sumsq[S[k]] += w[k] * w[k];
    }
  }

  void remove(Atom& a, int g, const Value& w) const {
    const auto& S = g0_.groups[g];
    for (std::size_t k = 0; k < S.size(); ++k) {
      const int j = S[k];
      a.cnt[j] -= 1.0;
      if (a.cnt[j] <= 0.0) {
        a.cnt[j] = a.sum[j] = a.sumsq[j] = 0.0;
      } else {
        a.sum[j] -= w[k];
        a.sumsq[j] -= w[k] * w[k];
      }
    }
  }

  /// Replace a member's value without touching the materialized coordinates.
  void replace(Atom& a, int g, const Value& old_w, const Value& new_w) const {
    const auto& S = g0_.groups[g];
    for (std::size_t k = 0; k < S.size(); ++k) {
      a.sum[S[k]] += new_w[k] - old_w[k];
      a.sumsq[S[k]] += new_w[k] * new_w[k] - old_w[k] * old_w[k];
    }
  }

  /// Draw the materialized coordinates from their full conditional.
  void refresh(Atom& a, Rng& rng) const { refresh_coords(a, detail::coords_where(a.cnt, true), rng); }

  /// Draw every coordinate from its full conditional (blocked sampler).
  void refresh_full(Atom& a, Rng& rng) const {
    std::vector<int> all(dim());
    for (int j = 0; j < dim(); ++j) all[j] = j;
    refresh_coords(a, all, rng);
  }

  /// Atom holding the materialized coordinates of both atoms (disjoint sets).
  Atom combine(const Atom& a, const Atom& b) const {
    Atom out = a;
    for (int j = 0; j < dim(); ++j)
      if (b.materialized(j)) {
        out.mu[j] = b.mu[j];
        out.cnt[j] = b.cnt[j];
        out.sum[j] = b.sum[j];
        out.sumsq[j] = b.sumsq[j];
      }
    return out;
  }

  /// The part of an atom on the coordinates flagged in `keep`.
  Atom restrict(const Atom& a, const std::vector<bool>& keep) const {
    Atom out = empty_atom();
    for (int j = 0; j < dim(); ++j)
      if (keep[j]) {
        out.mu[j] = a.mu[j];
        out.cnt[j] = a.cnt[j];
        out.sum[j] = a.sum[j];
        out.sumsq[j] = a.sumsq[j];
      }
    return out;
  }

  /// log G0 density of the materialized coordinates.
  double log_prior(const Atom& a) const { return log_prior_under(a, sigma_); }

  /// Member statistics of w only; the location is left alone.
  void accumulate(Atom& a, int g, const Value& w) const {
    const auto& S = g0_.groups[g];
    for (std::size_t k = 0; k < S.size(); ++k) {
      a.cnt[S[k]] += 1.0;
      a.sum[S[k]] += w[k];
      a.sumsq[S[k]] += w[k] * w[k];
    }
  }

  /// Members of both atoms; the location is taken from `a`.
  Atom pool(const Atom& a, const Atom& b) const {
    Atom out = a;
    out.cnt += b.cnt;
    out.sum += b.sum;
    out.sumsq += b.sumsq;
    return out;
  }

  /// log of the members' joint density with the location integrated over G0.
  double log_marginal(const Atom& a) const {
    if (likelihood_free_) return 0.0;
    const std::vector<int> M = detail::coords_where(a.cnt, true);
    if (M.empty()) return 0.0;
    double lp = 0.0;
    for (int j : M) lp -= 0.5 * a.cnt[j] * std::log(2.0 * std::numbers::pi * s2_[j]) + 0.5 * a.sumsq[j] / s2_[j];
    const Eigen::VectorXd m = detail::sub(g0_.mean, M);
    const Eigen::LLT<Eigen::MatrixXd> prior(detail::sub(sigma_, M, M));
    const Eigen::MatrixXd p0 = prior.solve(Eigen::MatrixXd::Identity(M.size(), M.size()));
    Eigen::MatrixXd p = p0;
    Eigen::VectorXd h = p0 * m;
    for (std::size_t k = 0; k < M.size(); ++k) {
      p(k, k) += a.cnt[M[k]] / s2_[M[k]];
      h[k] += a.sum[M[k]] / s2_[M[k]];
    }
    const Eigen::LLT<Eigen::MatrixXd> post(p);
    double logdet0 = 0.0, logdet = 0.0;
    for (std::size_t k = 0; k < M.size(); ++k) {
      logdet0 += 2.0 * std::log(prior.matrixLLT()(k, k));
      logdet += 2.0 * std::log(post.matrixLLT()(k, k));
    }
    return lp - 0.5 * m.dot(p0 * m) - 0.5 * logdet0 - 0.5 * logdet + 0.5 * h.dot(post.solve(h));
  }

  Value simulate(const Atom& a, int g, Rng& rng) const {
    const auto& S = g0_.groups[g];
    Value w(S.size());
    for (std::size_t k = 0; k < S.size(); ++k) w[k] = a.mu[S[k]] + std::sqrt(s2_[S[k]]) * std_normal(rng);
    return w;
  }

  /// Correlation and kernel-variance moves given the current atoms.
  void update_hyper(std::span<Atom* const> atoms, Rng& rng, bool adapt) {
    update_corr(atoms, rng, adapt);
    update_kernel_var(atoms, rng, adapt);
  }

  std::vector<std::pair<std::string, double>> hyper_values() const {
    std::vector<std::pair<std::string, double>> out;
    for (int i = 0; i < dim(); ++i)
      for (int j = i + 1; j < dim(); ++j)
        out.emplace_back("rho_" + std::to_string(i + 1) + std::to_string(j + 1), g0_.corr(i, j));
    if (var_prior_.kind != VariancePrior::Kind::Fixed)
      for (int j = 0; j < dim(); ++j) out.emplace_back("sigma2_" + std::to_string(j + 1), s2_[j]);
    return out;
  }

 private:
  void rebuild() {
    sigma_ = g0_.covariance();
    new_mean_.clear();
    new_llt_.clear();
    for (const auto& S : g0_.groups) {
      Eigen::MatrixXd c = detail::sub(sigma_, S, S);
      for (std::size_t k = 0; k < S.size(); ++k) c(k, k) += s2_[S[k]];
      new_mean_.push_back(detail::sub(g0_.mean, S));
      new_llt_.emplace_back(c);
    }
  }

  /// Conditional law of coordinates S[free_k] given the materialized ones.
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> conditional_of(const Atom& a, const std::vector<int>& S,
                                                             const std::vector<int>& free_k) const {
    std::vector<int> B(free_k.size());
    for (std::size_t b = 0; b < free_k.size(); ++b) B[b] = S[free_k[b]];
    const std::vector<int> M = detail::coords_where(a.cnt, true);
    Eigen::VectorXd m = detail::sub(g0_.mean, B);
    Eigen::MatrixXd c = detail::sub(sigma_, B, B);
    if (M.empty()) return {m, c};
    const Eigen::MatrixXd smm = detail::sub(sigma_, M, M);
    const Eigen::MatrixXd sbm = detail::sub(sigma_, B, M);
    Eigen::LLT<Eigen::MatrixXd> llt(smm);
    m += sbm * llt.solve(detail::sub(a.mu, M) - detail::sub(g0_.mean, M));
    c -= sbm * llt.solve(sbm.transpose());
    return {m, c};
  }

  void refresh_coords(Atom& a, const std::vector<int>& M, Rng& rng) const {
    if (M.empty()) return;
    const Eigen::MatrixXd pinv = detail::sub(sigma_, M, M).inverse();
    Eigen::MatrixXd prec = pinv;
    Eigen::VectorXd h = pinv * detail::sub(g0_.mean, M);
    if (!likelihood_free_) {
      for (std::size_t k = 0; k < M.size(); ++k) {
        prec(k, k) += a.cnt[M[k]] / s2_[M[k]];
        h[k] += a.sum[M[k]] / s2_[M[k]];
      }
    }
    const Eigen::VectorXd draw = detail::draw_canonical(rng, prec, h);
    for (std::size_t k = 0; k < M.size(); ++k) a.mu[M[k]] = draw[k];
  }

  double log_prior_under(const Atom& a, const Eigen::MatrixXd& sigma) const {
    const std::vector<int> M = detail::coords_where(a.cnt, true);
    if (M.empty()) return 0.0;
    return detail::log_mvn_pdf(detail::sub(a.mu, M), detail::sub(g0_.mean, M), detail::sub(sigma, M, M));
  }

  void update_corr(std::span<Atom* const> atoms, Rng& rng, bool adapt) {
    if (free_pairs_.empty()) return;
    auto total = [&](const Eigen::MatrixXd& sigma) {
      double s = 0.0;
      for (const Atom* a : atoms) s += log_prior_under(*a, sigma);
      return s;
    };
    double cur = total(sigma_);
    for (std::size_t p = 0; p < free_pairs_.size(); ++p) {
      auto [i, j] = free_pairs_[p];
      Eigen::MatrixXd corr = g0_.corr;
      const double r = reflect(corr(i, j) + corr_steps_[p].step() * std_normal(rng), -1.0, 1.0);
      corr(i, j) = corr(j, i) = r;
      bool accept = false;
      if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(corr, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() > 1e-10) {
        const Eigen::MatrixXd sigma = g0_.scale.asDiagonal() * corr * g0_.scale.asDiagonal();
        const double next = total(sigma);
        if (std::log(uniform01(rng)) < next - cur) {
          accept = true;
          cur = next;
          g0_.corr = corr;
          sigma_ = sigma;
        }
      }
      corr_steps_[p].record(accept, adapt);
    }
    rebuild();
  }

  void update_kernel_var(std::span<Atom* const> atoms, Rng& rng, bool adapt) {
    if (var_prior_.kind == VariancePrior::Kind::Fixed || likelihood_free_) return;
    for (int j = 0; j < dim(); ++j) {
      double n = 0.0, ss = 0.0;
      for (const Atom* a : atoms) {
        if (!a->materialized(j)) continue;
        const double mu = a->mu[j];
        n += a->cnt[j];
        ss += std::max(0.0, a->sumsq[j] - 2.0 * mu * a->sum[j] + a->cnt[j] * mu * mu);
      }
      if (var_prior_.kind == VariancePrior::Kind::InvGamma) {
        s2_[j] = 1.0 / gamma_draw(rng, var_prior_.shape + 0.5 * n, var_prior_.rate + 0.5 * ss);
        continue;
      }
      // Gamma prior: random walk on log sigma^2 (Jacobian included).
      auto target = [&](double v) {
        return var_prior_.shape * std::log(v) - var_prior_.rate * v - 0.5 * n * std::log(v) - 0.5 * ss / v;
      };
      for (int it = 0; it < 3; ++it) {
        const double prop = s2_[j] * std::exp(var_steps_[j].step() * std_normal(rng));
        const bool acc = std::log(uniform01(rng)) < target(prop) - target(s2_[j]);
        if (acc) s2_[j] = prop;
        var_steps_[j].record(acc, adapt);
      }
    }
    rebuild();
  }

  BaseMeasure g0_;
  Eigen::VectorXd s2_;
  CorrPrior corr_prior_;
  VariancePrior var_prior_;
  bool likelihood_free_;
  Eigen::MatrixXd sigma_;
  std::vector<Eigen::VectorXd> new_mean_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> new_llt_;
  std::vector<std::pair<int, int>> free_pairs_;
  std::vector<AdaptiveStep> corr_steps_;
  std::vector<AdaptiveStep> var_steps_;
};

}  // namespace furbi
