#pragma once

// Shared sampler pieces: hyperprior descriptors, chain settings, the
// (U_1, ..., U_G) update and the Levy-side hyperparameter moves.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "furbi/levy.hpp"
#include "furbi/random.hpp"
#include "furbi/special.hpp"

namespace furbi {

/// Gamma(shape, rate) prior on theta; fixed when `fixed` is set.
struct ThetaPrior {
  bool fixed = true;
  double shape = 1.0;
  double rate = 1.0;
};

/// Uniform prior on z in [0, 1]; fixed when `fixed` is set.
struct ZPrior {
  bool fixed = true;
  double step = 0.1;
};

/// Uniform prior on every free correlation, truncated to positive definite
/// matrices.
struct CorrPrior {
  bool fixed = true;
  double step = 0.15;
};

/// Prior on a kernel variance.
struct VariancePrior {
  enum class Kind { Fixed, InvGamma, Gamma };
  Kind kind = Kind::Fixed;
  double shape = 1.0;
  double rate = 1.0;  ///< scale for InvGamma
};

struct Hyperpriors {
  ThetaPrior theta;
  ZPrior z;
  CorrPrior corr;
  VariancePrior kernel_var;
};

struct McmcConfig {
  int iters = 2000;
  int burn_in = 1000;
  int thin = 1;
  std::uint64_t seed = 1;
  int chains = 1;
  int u_steps = 3;        ///< Metropolis steps on log U per sweep
  bool exact_u = false;   ///< exact U draw when the family allows it
  bool adapt = true;      ///< adapt random-walk scales during burn-in

  void validate() const {
    if (iters < 1) throw std::invalid_argument("mcmc: iters must be positive");
    if (burn_in < 0 || burn_in >= iters) throw std::invalid_argument("mcmc: need 0 <= burn_in < iters");
    if (thin < 1) throw std::invalid_argument("mcmc: thin must be positive");
    if (chains < 1) throw std::invalid_argument("mcmc: chains must be positive");
    if (u_steps < 1) throw std::invalid_argument("mcmc: u_steps must be positive");
  }
};

/// Random-walk scale with Robbins-Monro adaptation towards a target rate.
struct AdaptiveStep {
  double log_step = 0.0;
  double target = 0.3;
  long proposed = 0;
  long accepted = 0;
  double max_log_step = 10.0;

  double step() const { return std::exp(log_step); }

  void record(bool accept, bool adapt) {
    ++proposed;
    accepted += accept;
    if (!adapt) return;
    log_step += ((accept ? 1.0 : 0.0) - target) / std::sqrt(static_cast<double>(proposed) + 10.0);
    log_step = std::min(log_step, max_log_step);
  }

  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

/// Reflect x into [lo, hi] (folding with period 2 (hi - lo)).
inline double reflect(double x, double lo, double hi) {
  const double w = hi - lo;
  double y = std::fmod(x - lo, 2.0 * w);
  if (y < 0.0) y += 2.0 * w;
  if (y > w) y = 2.0 * w - y;
  return lo + y;
}

// ---- U update -------------------------------------------------------------------

/// log of u_1^{n_1} ... u_G^{n_G} prod_c tau_{n_c}(u) e^{-psi_b(u)}, i.e. the
/// U full conditional expressed in v = log u (Jacobian included). Groups with
/// no observations keep u_g = 0.
inline double log_u_target(const LevySpec& spec, const std::vector<std::vector<int>>& cluster_counts,
                           std::span<const int> group_sizes, std::span<const double> u) {
  double s = -psi_b(spec, u);
  for (std::size_t g = 0; g < u.size(); ++g)
    if (group_sizes[g] > 0) s += group_sizes[g] * std::log(u[g]);
  for (const auto& c : cluster_counts) s += log_tau(spec, std::span<const int>(c), u);
  return s;
}

/// One update of U. Gamma equal jumps admit an exact draw:
/// S = sum U ~ Beta-prime(N, theta) and U / S ~ Dirichlet(n_1, ..., n_G).
inline void update_u(const LevySpec& spec, const std::vector<std::vector<int>>& cluster_counts,
                     std::span<const int> group_sizes, std::vector<double>& u, AdaptiveStep& step, int steps,
                     bool exact, bool adapt, Rng& rng) {
  const std::size_t G = u.size();
  long total = 0;
  for (std::size_t g = 0; g < G; ++g) {
    if (group_sizes[g] == 0) u[g] = 0.0;
    total += group_sizes[g];
  }
  if (total == 0) return;
  if (exact && spec.family == LevyFamily::GammaEqualJumps) {
    // S = G_N / G_theta with G_theta = G_{theta+1} V^{1/theta}, in logs so a
    // small theta does not underflow the denominator.
    const double log_den = std::log(gamma_draw(rng, spec.theta + 1.0, 1.0)) + std::log(uniform01(rng)) / spec.theta;
    const double s = std::exp(std::min(std::log(gamma_draw(rng, static_cast<double>(total), 1.0)) - log_den, 700.0));
    double norm = 0.0;
    std::vector<double> d(G, 0.0);
    for (std::size_t g = 0; g < G; ++g)
      if (group_sizes[g] > 0) norm += d[g] = gamma_draw(rng, group_sizes[g], 1.0);
    for (std::size_t g = 0; g < G; ++g) u[g] = s * d[g] / norm;
    return;
  }
  for (std::size_t g = 0; g < G; ++g)
    if (group_sizes[g] > 0 && !(u[g] > 0.0)) u[g] = 1.0;
  double cur = log_u_target(spec, cluster_counts, group_sizes, u);
  std::vector<double> prop(G);
  for (int it = 0; it < steps; ++it) {
    const double h = step.step();
    for (std::size_t g = 0; g < G; ++g) prop[g] = group_sizes[g] > 0 ? u[g] * std::exp(h * std_normal(rng)) : 0.0;
    const double next = log_u_target(spec, cluster_counts, group_sizes, prop);
    const bool acc = std::log(uniform01(rng)) < next - cur;
    if (acc) {
      u = prop;
      cur = next;
    }
    step.record(acc, adapt);
  }
}

/// One random-walk step on each log u_g separately (groups with observations
/// only), each with its own adaptive scale.
inline void update_u_each(const LevySpec& spec, const std::vector<std::vector<int>>& cluster_counts,
                          std::span<const int> group_sizes, std::vector<double>& u, std::vector<AdaptiveStep>& steps,
                          bool adapt, Rng& rng) {
  double cur = log_u_target(spec, cluster_counts, group_sizes, u);
  for (std::size_t g = 0; g < u.size(); ++g) {
    if (group_sizes[g] == 0) continue;
    const double keep = u[g];
    u[g] = keep * std::exp(steps[g].step() * std_normal(rng));
    const double next = log_u_target(spec, cluster_counts, group_sizes, u);
    const bool acc = std::log(uniform01(rng)) < next - cur;
    if (acc) cur = next;
    else u[g] = keep;
    steps[g].record(acc, adapt);
  }
}

// ---- Levy hyperparameters -------------------------------------------------------

/// Conjugate theta draw: the partition and U contribute theta^K e^{-theta psi_1(U)}
/// where psi_1 is the joint exponent at theta = 1.
inline double draw_theta(const LevySpec& spec, const ThetaPrior& prior, int num_clusters, std::span<const double> u,
                         Rng& rng) {
  LevySpec unit = spec;
  unit.theta = 1.0;
  return gamma_draw(rng, prior.shape + num_clusters, prior.rate + psi_b(unit, u));
}

/// Reflected random walk on z with a uniform prior; target prod_c tau_{n_c}(U) e^{-psi_b(U)}.
inline void update_z(LevySpec& spec, const std::vector<std::vector<int>>& cluster_counts, std::span<const double> u,
                     double step, Rng& rng) {
  if (spec.family != LevyFamily::AdditiveGamma) return;
  auto target = [&](const LevySpec& s) {
    double v = -psi_b(s, u);
    for (const auto& c : cluster_counts) v += log_tau(s, std::span<const int>(c), u);
    return v;
  };
  LevySpec prop = spec;
  prop.z = reflect(spec.z + step * std_normal(rng), 0.0, 1.0);
  const double cur = target(spec), next = target(prop);
  if (std::isnan(next)) return;
  if (std::log(uniform01(rng)) < next - cur || (std::isinf(cur) && cur < 0 && std::isfinite(next))) spec = prop;
}

}  // namespace furbi
