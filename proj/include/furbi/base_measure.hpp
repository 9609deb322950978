#pragma once

// Atom distributions G0 on product spaces.
//
// Every Gaussian family is described by a latent vector mu ~ N(mean, Sigma)
// and, for each group g, the subset S_g of latent coordinates that the
// group's atom exposes. Two groups sharing a coordinate carry identical values
// there, which covers the degenerate (diagonal and missing-data) cases.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "furbi/random.hpp"
#include "furbi/special.hpp"

namespace furbi {

enum class BaseFamily {
  BivariateGaussian,
  MultivariateGaussianCorr,
  DiagonalDegenerate,
  NormalInvGammaPair,
  MissingDataDegenerate,
};

inline std::string to_string(BaseFamily f) {
  switch (f) {
    case BaseFamily::BivariateGaussian: return "bivariate_gaussian";
    case BaseFamily::MultivariateGaussianCorr: return "multivariate_gaussian";
    case BaseFamily::DiagonalDegenerate: return "diagonal";
    case BaseFamily::NormalInvGammaPair: return "normal_inverse_gamma";
    case BaseFamily::MissingDataDegenerate: return "missing_data";
  }
  return "unknown";
}

/// Hyperparameters of the Normal-InverseGamma pair.
struct NigParams {
  double lambda1 = 1.0, lambda2 = 1.0;
  double alpha1 = 2.0, beta1 = 4.0;
  double alpha2 = 2.0, beta2 = 4.0;

  void validate() const {
    if (!(lambda1 > 0 && lambda2 > 0 && alpha1 > 0 && beta1 > 0 && alpha2 > 0 && beta2 > 0))
      throw std::invalid_argument("NigParams: all hyperparameters must be positive");
  }
};

/// One atom: the location vector exposed to each group. For the
/// Normal-InverseGamma pair each group's vector is (location, variance).
using Atom = std::vector<Eigen::VectorXd>;

struct BaseMeasure {
  BaseFamily family = BaseFamily::BivariateGaussian;
  Eigen::VectorXd mean;   ///< latent mean (NIG: (m1, m2))
  Eigen::VectorXd scale;  ///< latent standard deviations (unused for NIG)
  Eigen::MatrixXd corr;   ///< latent correlation matrix (NIG: 2x2 with rho0)
  std::optional<NigParams> nig;
  std::vector<std::vector<int>> groups;  ///< latent coordinates seen by each group

  int latent_dim() const { return static_cast<int>(mean.size()); }
  int num_groups() const { return static_cast<int>(groups.size()); }

  /// Cross-correlation parameter of the first two groups' atoms.
  double rho0() const {
    if (family == BaseFamily::DiagonalDegenerate) return 1.0;
    return corr(groups[0][0], groups[1][0]);
  }

  Eigen::MatrixXd covariance() const {
    if (family == BaseFamily::NormalInvGammaPair)
      throw std::logic_error("BaseMeasure::covariance: NIG covariance depends on the variances");
    return scale.asDiagonal() * corr * scale.asDiagonal();
  }

  void validate() const {
    const int d = latent_dim();
    if (d == 0) throw std::invalid_argument("BaseMeasure: empty mean");
    if (corr.rows() != d || corr.cols() != d) throw std::invalid_argument("BaseMeasure: corr has wrong shape");
    if (family != BaseFamily::NormalInvGammaPair) {
      if (scale.size() != d) throw std::invalid_argument("BaseMeasure: scale has wrong length");
      for (int i = 0; i < d; ++i)
        if (!(scale[i] > 0)) throw std::invalid_argument("BaseMeasure: scales must be positive");
    }
    for (int i = 0; i < d; ++i) {
      if (std::abs(corr(i, i) - 1.0) > 1e-12) throw std::invalid_argument("BaseMeasure: corr diagonal must be 1");
      for (int j = 0; j < d; ++j) {
        if (std::abs(corr(i, j) - corr(j, i)) > 1e-12) throw std::invalid_argument("BaseMeasure: corr not symmetric");
        if (std::abs(corr(i, j)) > 1.0) throw std::invalid_argument("BaseMeasure: |corr| exceeds 1");
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
    const double min_eig = es.eigenvalues().minCoeff();
    const bool allow_semidefinite = family == BaseFamily::NormalInvGammaPair;
    if (min_eig < -1e-12 || (!allow_semidefinite && min_eig <= 0.0))
      throw std::invalid_argument("BaseMeasure: corr is not positive definite");
    if (groups.size() < 1) throw std::invalid_argument("BaseMeasure: at least one group required");
    for (const auto& g : groups) {
      if (g.empty()) throw std::invalid_argument("BaseMeasure: group with no coordinates");
      for (int c : g)
        if (c < 0 || c >= d) throw std::invalid_argument("BaseMeasure: group coordinate out of range");
    }
    if (nig) nig->validate();
    if (family == BaseFamily::NormalInvGammaPair && !nig)
      throw std::invalid_argument("BaseMeasure: NIG family requires NigParams");
  }
};

/// Assemble a correlation matrix from the upper-triangle entries
/// (r12, r13, ..., r1d, r23, ...). Returns nullopt when the result is not
/// positive definite.
inline std::optional<Eigen::MatrixXd> build_corr_matrix(const std::vector<double>& rhos, int dim) {
  if (dim < 1) throw std::invalid_argument("build_corr_matrix: dim must be positive");
  if (static_cast<int>(rhos.size()) != dim * (dim - 1) / 2)
    throw std::invalid_argument("build_corr_matrix: expected dim*(dim-1)/2 correlations");
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(dim, dim);
  std::size_t k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      const double v = rhos[k++];
      if (!(std::abs(v) <= 1.0)) throw std::domain_error("build_corr_matrix: |rho| must be <= 1");
      r(i, j) = r(j, i) = v;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) return std::nullopt;
  if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r).eigenvalues().minCoeff() <= 1e-12) return std::nullopt;
  return r;
}

// ---- factories --------------------------------------------------------------

inline BaseMeasure bivariate_gaussian(double mean, double sd, double rho0) {
  BaseMeasure g;
  g.family = BaseFamily::BivariateGaussian;
  g.mean = Eigen::Vector2d(mean, mean);
  g.scale = Eigen::Vector2d(sd, sd);
  g.corr = Eigen::Matrix2d{{1.0, rho0}, {rho0, 1.0}};
  g.groups = {{0}, {1}};
  return g;
}

inline BaseMeasure diagonal_degenerate(double mean, double sd) {
  BaseMeasure g;
  g.family = BaseFamily::DiagonalDegenerate;
  g.mean = Eigen::VectorXd::Constant(1, mean);
  g.scale = Eigen::VectorXd::Constant(1, sd);
  g.corr = Eigen::MatrixXd::Identity(1, 1);
  g.groups = {{0}, {0}};
  return g;
}

/// One latent coordinate per group with the given correlation matrix.
inline BaseMeasure multivariate_gaussian_corr(Eigen::VectorXd mean, Eigen::VectorXd scale, Eigen::MatrixXd corr) {
  BaseMeasure g;
  g.family = BaseFamily::MultivariateGaussianCorr;
  g.groups.resize(mean.size());
  for (int i = 0; i < mean.size(); ++i) g.groups[i] = {i};
  g.mean = std::move(mean);
  g.scale = std::move(scale);
  g.corr = std::move(corr);
  return g;
}

/// Single exchangeable sample: one group exposing the whole latent vector.
inline BaseMeasure single_group_gaussian(Eigen::VectorXd mean, Eigen::VectorXd scale, Eigen::MatrixXd corr) {
  BaseMeasure g;
  g.family = BaseFamily::MultivariateGaussianCorr;
  std::vector<int> all(mean.size());
  for (int i = 0; i < mean.size(); ++i) all[i] = i;
  g.groups = {all};
  g.mean = std::move(mean);
  g.scale = std::move(scale);
  g.corr = std::move(corr);
  return g;
}

inline BaseMeasure normal_inv_gamma_pair(double m1, double m2, double rho0, const NigParams& p) {
  BaseMeasure g;
  g.family = BaseFamily::NormalInvGammaPair;
  g.mean = Eigen::Vector2d(m1, m2);
  g.scale = Eigen::Vector2d(1.0, 1.0);
  g.corr = Eigen::Matrix2d{{1.0, rho0}, {rho0, 1.0}};
  g.nig = p;
  g.groups = {{0}, {1}};
  return g;
}

/// Normal-InverseGamma atoms for a single sample (group 0 uses lambda1,
/// alpha1, beta1).
inline BaseMeasure normal_inv_gamma_single(double m, const NigParams& p) {
  BaseMeasure g;
  g.family = BaseFamily::NormalInvGammaPair;
  g.mean = Eigen::VectorXd::Constant(1, m);
  g.scale = Eigen::VectorXd::Ones(1);
  g.corr = Eigen::MatrixXd::Identity(1, 1);
  g.nig = p;
  g.groups = {{0}};
  return g;
}

/// P-variate latent Gaussian; group g exposes the coordinates observed under
/// its missingness pattern.
inline BaseMeasure missing_data_degenerate(Eigen::VectorXd mean, Eigen::VectorXd scale, Eigen::MatrixXd corr,
                                           std::vector<std::vector<int>> groups) {
  BaseMeasure g;
  g.family = BaseFamily::MissingDataDegenerate;
  g.mean = std::move(mean);
  g.scale = std::move(scale);
  g.corr = std::move(corr);
  g.groups = std::move(groups);
  return g;
}

// ---- sampling -----------------------------------------------------------------

namespace detail {

inline Eigen::VectorXd mvn_draw(Rng& rng, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::domain_error("mvn_draw: covariance not positive definite");
  Eigen::VectorXd z(mean.size());
  for (int i = 0; i < z.size(); ++i) z[i] = std_normal(rng);
  return mean + llt.matrixL() * z;
}

inline double inv_gamma_draw(Rng& rng, double shape, double scale) { return 1.0 / gamma_draw(rng, shape, scale); }

inline Eigen::Matrix2d nig_cov(const BaseMeasure& g, double var_w, double var_v) {
  const auto& p = *g.nig;
  const double r = g.corr(0, 1);
  const double c = r * std::sqrt(var_w / p.lambda1) * std::sqrt(var_v / p.lambda2);
  return Eigen::Matrix2d{{var_w / p.lambda1, c}, {c, var_v / p.lambda2}};
}

inline Atom split_latent(const BaseMeasure& g, const Eigen::VectorXd& mu) {
  Atom a(g.groups.size());
  for (std::size_t k = 0; k < g.groups.size(); ++k) {
    a[k].resize(g.groups[k].size());
    for (std::size_t j = 0; j < g.groups[k].size(); ++j) a[k][j] = mu[g.groups[k][j]];
  }
  return a;
}

}  // namespace detail

/// One draw from G0.
inline Atom sample_pair(const BaseMeasure& g, Rng& rng) {
  if (g.family == BaseFamily::NormalInvGammaPair) {
    const auto& p = *g.nig;
    const double vw = detail::inv_gamma_draw(rng, p.alpha1, p.beta1);
    const double vv = detail::inv_gamma_draw(rng, p.alpha2, p.beta2);
    const Eigen::Vector2d xy = detail::mvn_draw(rng, g.mean, detail::nig_cov(g, vw, vv));
    return {Eigen::Vector2d(xy[0], vw), Eigen::Vector2d(xy[1], vv)};
  }
  return detail::split_latent(g, detail::mvn_draw(rng, g.mean, g.covariance()));
}

/// Law of one group's atom given another group's atom.
struct ConditionalLaw {
  enum class Kind { Gaussian, Dirac, GaussianGivenSubset, NigCompanion };
  Kind kind = Kind::Gaussian;
  Eigen::VectorXd mean;  ///< for Dirac coordinates this is the anchor
  Eigen::MatrixXd cov;   ///< zero rows/cols on Dirac coordinates
  // NigCompanion: y | x, var_w ~ N(m2 + slope * sqrt(var_v), (1-r^2) var_v / lambda2), var_v ~ IG(alpha2, beta2)
  double nig_slope = 0.0;
  double nig_resid = 0.0;
  double nig_mean = 0.0;
  double nig_alpha = 0.0, nig_beta = 0.0;

  Eigen::VectorXd sample(Rng& rng) const {
    if (kind == Kind::NigCompanion) {
      const double vv = detail::inv_gamma_draw(rng, nig_alpha, nig_beta);
      const double sd = std::sqrt(vv);
      const double y = nig_mean + nig_slope * sd + std::sqrt(nig_resid * vv) * std_normal(rng);
      return Eigen::Vector2d(y, vv);
    }
    if (kind == Kind::Dirac) return mean;
    // Draw only the non-degenerate block.
    std::vector<int> free;
    for (int i = 0; i < mean.size(); ++i)
      if (cov(i, i) > 0.0) free.push_back(i);
    Eigen::VectorXd out = mean;
    if (free.empty()) return out;
    Eigen::VectorXd m(free.size());
    Eigen::MatrixXd c(free.size(), free.size());
    for (std::size_t a = 0; a < free.size(); ++a) {
      m[a] = mean[free[a]];
      for (std::size_t b = 0; b < free.size(); ++b) c(a, b) = cov(free[a], free[b]);
    }
    const Eigen::VectorXd d = detail::mvn_draw(rng, m, c);
    for (std::size_t a = 0; a < free.size(); ++a) out[free[a]] = d[a];
    return out;
  }
};

/// Conditional law of group `target`'s atom given group `given`'s atom value.
inline ConditionalLaw conditional(const BaseMeasure& g, int given, const Eigen::VectorXd& value, int target) {
  if (given < 0 || given >= g.num_groups() || target < 0 || target >= g.num_groups())
    throw std::out_of_range("conditional: group index out of range");
  if (given == target) throw std::invalid_argument("conditional: conditioning on all coordinates of the target");
  ConditionalLaw law;
  if (g.family == BaseFamily::NormalInvGammaPair) {
    const auto& p = *g.nig;
    const double r = g.corr(0, 1);
    const int tg = target;  // 0 or 1
    const double lam_t = tg == 0 ? p.lambda1 : p.lambda2, lam_g = tg == 0 ? p.lambda2 : p.lambda1;
    const double x = value[0], var_given = value[1];
    law.kind = ConditionalLaw::Kind::NigCompanion;
    law.nig_mean = g.mean[tg];
    // E[y | x, var_v] = m_t + r sqrt(var_v) sqrt(lam_g) (x - m_g) / (sqrt(var_w) sqrt(lam_t))
    law.nig_slope = r * std::sqrt(lam_g) * (x - g.mean[given]) / (std::sqrt(var_given) * std::sqrt(lam_t));
    law.nig_resid = (1.0 - r * r) / lam_t;
    law.nig_alpha = tg == 0 ? p.alpha1 : p.alpha2;
    law.nig_beta = tg == 0 ? p.beta1 : p.beta2;
    return law;
  }
  const auto& sg = g.groups[given];
  const auto& st = g.groups[target];
  if (value.size() != static_cast<int>(sg.size())) throw std::invalid_argument("conditional: value has wrong length");
  const Eigen::MatrixXd sigma = g.covariance();
  // Gaussian conditioning of latent coordinates on the observed set.
  const int k = static_cast<int>(sg.size());
  Eigen::MatrixXd s_oo(k, k);
  Eigen::VectorXd diff(k);
  for (int a = 0; a < k; ++a) {
    diff[a] = value[a] - g.mean[sg[a]];
    for (int b = 0; b < k; ++b) s_oo(a, b) = sigma(sg[a], sg[b]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s_oo);
  const Eigen::VectorXd alpha = llt.solve(diff);
  const int t = static_cast<int>(st.size());
  Eigen::MatrixXd s_to(t, k), s_tt(t, t);
  for (int a = 0; a < t; ++a) {
    for (int b = 0; b < k; ++b) s_to(a, b) = sigma(st[a], sg[b]);
    for (int b = 0; b < t; ++b) s_tt(a, b) = sigma(st[a], st[b]);
  }
  law.mean = Eigen::VectorXd(t);
  for (int a = 0; a < t; ++a) law.mean[a] = g.mean[st[a]];
  law.mean += s_to * alpha;
  law.cov = s_tt - s_to * llt.solve(s_to.transpose());
  int shared = 0;
  for (int a = 0; a < t; ++a) {
    for (int b = 0; b < k; ++b)
      if (st[a] == sg[b]) {
        ++shared;
        law.mean[a] = value[b];
        law.cov.row(a).setZero();
        law.cov.col(a).setZero();
      }
  }
  law.kind = shared == t ? ConditionalLaw::Kind::Dirac
             : shared == 0 ? ConditionalLaw::Kind::Gaussian
                           : ConditionalLaw::Kind::GaussianGivenSubset;
  return law;
}

// ---- densities ------------------------------------------------------------------

namespace detail {

inline double log_mvn_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::domain_error("log_mvn_pdf: covariance not positive definite");
  const Eigen::VectorXd d = x - mean;
  const Eigen::VectorXd z = llt.matrixL().solve(d);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (x.size() * std::log(2.0 * std::numbers::pi) + logdet + z.squaredNorm());
}

inline double log_inv_gamma_pdf(double v, double a, double b) {
  if (!(v > 0)) return -std::numeric_limits<double>::infinity();
  return a * std::log(b) - log_gamma(a) - (a + 1) * std::log(v) - b / v;
}

}  // namespace detail

/// log density of P0 for group `group` (NIG: joint density of (location, variance)).
inline double log_p0_density(const BaseMeasure& g, int group, const Eigen::VectorXd& point) {
  if (g.family == BaseFamily::NormalInvGammaPair) {
    const auto& p = *g.nig;
    const double lam = group == 0 ? p.lambda1 : p.lambda2;
    const double v = point[1];
    const double a = group == 0 ? p.alpha1 : p.alpha2, b = group == 0 ? p.beta1 : p.beta2;
    return log_normal_pdf(point[0], g.mean[group], v / lam) + detail::log_inv_gamma_pdf(v, a, b);
  }
  const auto& s = g.groups[group];
  Eigen::VectorXd m(s.size());
  Eigen::MatrixXd c(s.size(), s.size());
  const Eigen::MatrixXd sigma = g.covariance();
  for (std::size_t a = 0; a < s.size(); ++a) {
    m[a] = g.mean[s[a]];
    for (std::size_t b = 0; b < s.size(); ++b) c(a, b) = sigma(s[a], s[b]);
  }
  return detail::log_mvn_pdf(point, m, c);
}

inline double p0_density(const BaseMeasure& g, int group, const Eigen::VectorXd& point) {
  return std::exp(log_p0_density(g, group, point));
}

/// log density of G0 for an atom of the first two groups. Degenerate families
/// use Lebesgue measure on the support (the union of the exposed coordinates);
/// atoms off the support have density zero.
inline double log_g0_density(const BaseMeasure& g, const Atom& atom) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (g.family == BaseFamily::NormalInvGammaPair) {
    const auto& p = *g.nig;
    const double vw = atom[0][1], vv = atom[1][1];
    if (!(vw > 0 && vv > 0)) return neg_inf;
    return detail::log_mvn_pdf(Eigen::Vector2d(atom[0][0], atom[1][0]), g.mean, detail::nig_cov(g, vw, vv)) +
           detail::log_inv_gamma_pdf(vw, p.alpha1, p.beta1) + detail::log_inv_gamma_pdf(vv, p.alpha2, p.beta2);
  }
  std::vector<int> coords;
  std::vector<double> vals;
  for (std::size_t k = 0; k < atom.size(); ++k) {
    for (std::size_t j = 0; j < g.groups[k].size(); ++j) {
      const int c = g.groups[k][j];
      bool seen = false;
      for (std::size_t q = 0; q < coords.size(); ++q)
        if (coords[q] == c) {
          seen = true;
          if (vals[q] != atom[k][j]) return neg_inf;
        }
      if (!seen) {
        coords.push_back(c);
        vals.push_back(atom[k][j]);
      }
    }
  }
  const Eigen::MatrixXd sigma = g.covariance();
  Eigen::VectorXd x(coords.size()), m(coords.size());
  Eigen::MatrixXd c(coords.size(), coords.size());
  for (std::size_t a = 0; a < coords.size(); ++a) {
    x[a] = vals[a];
    m[a] = g.mean[coords[a]];
    for (std::size_t b = 0; b < coords.size(); ++b) c(a, b) = sigma(coords[a], coords[b]);
  }
  return detail::log_mvn_pdf(x, m, c);
}

inline double g0_density(const BaseMeasure& g, const Atom& atom) { return std::exp(log_g0_density(g, atom)); }

}  // namespace furbi
