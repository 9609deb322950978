#pragma once

// Joint Levy intensities on pairs (and groups) of jump sizes: Laplace
// exponents, tau-integrals and their derivatives.
//
// Conventions. rho is the Levy intensity *without* the total mass theta, so
// the Laplace exponents carry a factor theta while tau does not:
//   psi_b(u) = theta * int (1 - exp(-<u, s>)) rho(ds),
//   tau_{n}(u) = int exp(-<u, s>) prod_g s_g^{n_g} rho(ds).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

#include "furbi/special.hpp"

namespace furbi {

enum class LevyFamily {
  GammaEqualJumps,     ///< rho(ds) = s^{-1} e^{-s} ds on the diagonal
  InvGaussEqualJumps,  ///< rho(ds) = e^{-s/2} s^{-3/2} / sqrt(2 pi) ds on the diagonal
  AdditiveGamma,       ///< z * (idiosyncratic gamma per group) + (1-z) * (common gamma)
};

inline std::string to_string(LevyFamily f) {
  switch (f) {
    case LevyFamily::GammaEqualJumps: return "gamma";
    case LevyFamily::InvGaussEqualJumps: return "inverse_gaussian";
    case LevyFamily::AdditiveGamma: return "additive_gamma";
  }
  return "unknown";
}

inline LevyFamily levy_family_from_string(const std::string& s) {
  if (s == "gamma") return LevyFamily::GammaEqualJumps;
  if (s == "inverse_gaussian") return LevyFamily::InvGaussEqualJumps;
  if (s == "additive_gamma") return LevyFamily::AdditiveGamma;
  throw std::invalid_argument("unknown Levy family '" + s + "'");
}

struct LevySpec {
  LevyFamily family = LevyFamily::GammaEqualJumps;
  double theta = 1.0;
  double z = 0.0;  ///< AdditiveGamma only

  void validate() const {
    if (!(theta > 0.0) || !std::isfinite(theta))
      throw std::invalid_argument("LevySpec: theta must be positive and finite");
    if (family == LevyFamily::AdditiveGamma && !(z >= 0.0 && z <= 1.0))
      throw std::invalid_argument("LevySpec: z must lie in [0, 1]");
  }

  /// True when all jumps are shared across groups (jump sizes on the diagonal).
  bool equal_jumps() const { return family != LevyFamily::AdditiveGamma || z == 0.0; }
};

namespace detail {

inline void require_nonneg(double u, const char* what) {
  if (!(u >= 0.0)) throw std::domain_error(std::string(what) + ": argument must be non-negative");
}

/// Marginal exponent divided by theta.
inline double psi_unit(LevyFamily f, double u) {
  if (f == LevyFamily::InvGaussEqualJumps) return std::sqrt(1.0 + 2.0 * u) - 1.0;
  return std::log1p(u);
}

/// log of the single-jump tau-integral int s^j e^{-u s} rho(ds) for an equal-jumps
/// gamma or inverse-Gaussian intensity, j >= 1.
inline double log_tau_diag(LevyFamily f, double j, double u) {
  if (f == LevyFamily::InvGaussEqualJumps) {
    return (j - 1.0) * std::numbers::ln2 + log_gamma(j - 0.5) - 0.5 * std::log(std::numbers::pi) -
           (j - 0.5) * std::log1p(2.0 * u);
  }
  return log_gamma(j) - j * std::log1p(u);
}

}  // namespace detail

/// Marginal Laplace exponent psi(u).
inline double psi(const LevySpec& spec, double u) {
  detail::require_nonneg(u, "psi");
  return spec.theta * detail::psi_unit(spec.family, u);
}

/// psi'' (second derivative of the marginal exponent).
inline double psi_second(const LevySpec& spec, double u) {
  detail::require_nonneg(u, "psi_second");
  if (spec.family == LevyFamily::InvGaussEqualJumps) return -spec.theta * std::pow(1.0 + 2.0 * u, -1.5);
  return -spec.theta / ((1.0 + u) * (1.0 + u));
}

/// Joint exponent for an arbitrary number of groups.
inline double psi_b(const LevySpec& spec, std::span<const double> u) {
  double total = 0.0;
  for (double v : u) {
    detail::require_nonneg(v, "psi_b");
    total += v;
  }
  if (spec.family != LevyFamily::AdditiveGamma) return spec.theta * detail::psi_unit(spec.family, total);
  double idio = 0.0;
  for (double v : u) idio += std::log1p(v);
  return spec.theta * (spec.z * idio + (1.0 - spec.z) * std::log1p(total));
}

inline double psi_b(const LevySpec& spec, double u1, double u2) {
  const double u[2] = {u1, u2};
  return psi_b(spec, std::span<const double>(u, 2));
}

/// Mixed partial d^2 psi_b / du1 du2.
inline double psi_b_mixed(const LevySpec& spec, double u1, double u2) {
  detail::require_nonneg(u1, "psi_b_mixed");
  detail::require_nonneg(u2, "psi_b_mixed");
  const double u = u1 + u2;
  switch (spec.family) {
    case LevyFamily::GammaEqualJumps: return -spec.theta / ((1.0 + u) * (1.0 + u));
    case LevyFamily::InvGaussEqualJumps: return -spec.theta * std::pow(1.0 + 2.0 * u, -1.5);
    case LevyFamily::AdditiveGamma: return -spec.theta * (1.0 - spec.z) / ((1.0 + u) * (1.0 + u));
  }
  return 0.0;
}

/// log tau for a vector of per-group counts (at least one positive).
/// Returns -inf when the integral vanishes (AdditiveGamma with z = 1 and
/// counts in more than one group).
inline double log_tau(const LevySpec& spec, std::span<const int> counts, std::span<const double> u) {
  if (counts.size() != u.size()) throw std::invalid_argument("log_tau: counts and u differ in length");
  long total = 0;
  int active = 0;
  std::size_t last = 0;
  double usum = 0.0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    if (counts[g] < 0) throw std::domain_error("log_tau: negative count");
    detail::require_nonneg(u[g], "log_tau");
    usum += u[g];
    if (counts[g] > 0) {
      total += counts[g];
      ++active;
      last = g;
    }
  }
  if (total == 0) throw std::domain_error("tau: at least one count must be positive");
  const double n = static_cast<double>(total);
  if (spec.family != LevyFamily::AdditiveGamma) return detail::log_tau_diag(spec.family, n, usum);

  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  const double common =
      spec.z < 1.0 ? std::log1p(-spec.z) + log_gamma(n) - n * std::log1p(usum) : neg_inf;
  if (active > 1) return common;
  const double idio = spec.z > 0.0 ? std::log(spec.z) + log_gamma(n) - n * std::log1p(u[last]) : neg_inf;
  return log_add(idio, common);
}

inline double log_tau(const LevySpec& spec, int n, int m, double u1, double u2) {
  const int c[2] = {n, m};
  const double u[2] = {u1, u2};
  return log_tau(spec, std::span<const int>(c, 2), std::span<const double>(u, 2));
}

/// tau_{n,m}(u1, u2) = int e^{-u1 s1 - u2 s2} s1^n s2^m rho(ds1, ds2).
inline double tau(const LevySpec& spec, int n, int m, double u1, double u2) {
  return std::exp(log_tau(spec, n, m, u1, u2));
}

// ---- one-dimensional jump intensities --------------------------------------
//
// The (posterior) intensities met by the samplers are exponentially tilted
// versions of the two base shapes
//   Gamma:    mass * s^{-1}   e^{-a s}
//   InvGauss: mass * s^{-3/2} e^{-a s} / sqrt(2 pi)
// with a = 1 + U (gamma) or a = 1/2 + U (inverse Gaussian).

enum class JumpShape { Gamma, InvGauss };

struct JumpIntensity {
  JumpShape shape = JumpShape::Gamma;
  double mass = 1.0;
  double rate = 1.0;  ///< the a above
};

/// N(s) = int_s^inf nu(t) dt.
inline double tail_mass(const JumpIntensity& nu, double s) {
  if (!(s > 0.0)) throw std::domain_error("tail_mass: s must be positive");
  const double x = nu.rate * s;
  if (nu.shape == JumpShape::Gamma) return nu.mass * expint_e1(x);
  // int_s^inf t^{-3/2} e^{-a t} dt = 2 s^{-1/2} e^{-a s} - 2 sqrt(a pi) erfc(sqrt(a s))
  const double v = 2.0 * std::exp(-x) / std::sqrt(s) - 2.0 * std::sqrt(nu.rate * std::numbers::pi) * std::erfc(std::sqrt(x));
  return nu.mass * std::max(v, 0.0) / std::sqrt(2.0 * std::numbers::pi);
}

/// Intensity density nu(s).
inline double jump_density(const JumpIntensity& nu, double s) {
  if (nu.shape == JumpShape::Gamma) return nu.mass * std::exp(-nu.rate * s) / s;
  return nu.mass * std::exp(-nu.rate * s) * std::pow(s, -1.5) / std::sqrt(2.0 * std::numbers::pi);
}

/// Solves tail_mass(nu, s) = level for s: safeguarded Newton on log s.
/// `upper`, when positive, is a known solution bound from above (e.g. the
/// previous jump in a decreasing Ferguson-Klass sequence).
inline double inverse_tail_mass(const JumpIntensity& nu, double level, double upper = 0.0) {
  if (!(level > 0.0)) throw std::domain_error("inverse_tail_mass: level must be positive");
  double lo = std::log(1e-300);
  double hi = upper > 0.0 ? std::log(upper) : std::log(1e3 / nu.rate);
  while (tail_mass(nu, std::exp(hi)) > level) hi += 5.0;
  if (tail_mass(nu, std::exp(lo)) < level) return std::exp(lo);
  const double target = std::log(level);
  double y = std::max(lo, hi - 1.0);
  for (int i = 0; i < 200; ++i) {
    const double s = std::exp(y);
    const double n = tail_mass(nu, s);
    const double f = std::log(n) - target;
    if (f > 0.0) lo = y; else hi = y;
    if (std::abs(f) < 1e-13 || hi - lo < 1e-14) break;
    // d log N / d log s = -s nu(s) / N(s)
    const double slope = -s * jump_density(nu, s) / n;
    double next = y - f / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    y = next;
  }
  return std::exp(y);
}

/// Expected total size of the jumps below s: int_0^s t nu(t) dt.
inline double residual_mass(const JumpIntensity& nu, double s) {
  if (!(s >= 0.0)) throw std::domain_error("residual_mass: s must be non-negative");
  if (nu.shape == JumpShape::Gamma) return nu.mass * -std::expm1(-nu.rate * s) / nu.rate;
  return nu.mass * std::erf(std::sqrt(nu.rate * s)) / std::sqrt(2.0 * nu.rate);
}

}  // namespace furbi
