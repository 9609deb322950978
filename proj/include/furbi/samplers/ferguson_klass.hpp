#pragma once

// Conditional (Ferguson-Klass) draw of the pair of random measures given
// the latent U and the hyper-tie structure: a truncated series of random
// jumps from the tilted intensity e^{-U1 s1 - U2 s2} rho(ds1, ds2) G0(dx),
// plus one fixed atom per cluster whose jump pair has density proportional
// to s1^{n_i} s2^{m_j} e^{-U1 s1 - U2 s2} rho(ds1, ds2).

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "furbi/base_measure.hpp"
#include "furbi/levy.hpp"
#include "furbi/random.hpp"

namespace furbi {

struct FkCluster {
  int n = 0;  ///< members in the first sample
  int m = 0;  ///< members in the second sample
  Atom atom;  ///< values of the sides with members; other sides are drawn
};

struct FkContext {
  double u1 = 0.0;
  double u2 = 0.0;
  std::vector<FkCluster> clusters;
  int truncation = 2000;
  bool with_atoms = true;  ///< skip atom draws when only the jumps are needed
};

struct FKDraw {
  std::vector<std::array<double, 2>> jumps;
  std::vector<Atom> atoms;
  std::vector<std::array<double, 2>> fixed_jumps;
  std::vector<Atom> fixed_atoms;
  int truncation = 0;
  std::array<double, 2> residual{};  ///< expected mass of the jumps left out
  /// Per coordinate: shares of the random part, hyper-tied, first-only and
  /// second-only fixed atoms.
  std::array<std::array<double, 4>, 2> parts{};

  double total(int g) const {
    double t = 0.0;
    for (const auto& j : jumps) t += j[g];
    for (const auto& j : fixed_jumps) t += j[g];
    return t;
  }

  /// Normalized weights of coordinate g: random jumps first, then fixed atoms.
  std::vector<double> weights(int g) const {
    const double t = total(g);
    std::vector<double> w;
    w.reserve(jumps.size() + fixed_jumps.size());
    for (const auto& j : jumps) w.push_back(j[g] / t);
    for (const auto& j : fixed_jumps) w.push_back(j[g] / t);
    return w;
  }
};

namespace detail {

/// Decreasing Ferguson-Klass jumps of a one-dimensional intensity.
inline std::vector<double> fk_jumps(const JumpIntensity& nu, int M, Rng& rng) {
  std::vector<double> s(M);
  double xi = 0.0;
  for (int k = 0; k < M; ++k) {
    xi += exponential_draw(rng, 1.0);
    s[k] = inverse_tail_mass(nu, xi, k > 0 ? s[k - 1] : 0.0);
    if (!(s[k] > 0.0) || !std::isfinite(s[k]))
      throw std::runtime_error("ferguson_klass_draw: tail inversion failed at jump " + std::to_string(k) +
                               " (level " + std::to_string(xi) + ")");
  }
  return s;
}

}  // namespace detail

inline FKDraw ferguson_klass_draw(const LevySpec& spec, const BaseMeasure& g0, const FkContext& ctx, Rng& rng) {
  spec.validate();
  if (ctx.truncation < 1) throw std::invalid_argument("ferguson_klass_draw: truncation must be positive");
  if (!(ctx.u1 >= 0.0 && ctx.u2 >= 0.0)) throw std::invalid_argument("ferguson_klass_draw: U must be non-negative");
  FKDraw d;
  d.truncation = ctx.truncation;
  const double us = ctx.u1 + ctx.u2;
  const int M = ctx.truncation;

  auto push_random = [&](const JumpIntensity& nu, bool first, bool second) {
    for (double s : detail::fk_jumps(nu, M, rng)) {
      d.jumps.push_back({first ? s : 0.0, second ? s : 0.0});
      if (ctx.with_atoms) d.atoms.push_back(sample_pair(g0, rng));
    }
    const double r = residual_mass(nu, d.jumps.back()[first ? 0 : 1]);
    if (first) d.residual[0] += r;
    if (second) d.residual[1] += r;
  };

  switch (spec.family) {
    case LevyFamily::GammaEqualJumps:
      push_random({JumpShape::Gamma, spec.theta, 1.0 + us}, true, true);
      break;
    case LevyFamily::InvGaussEqualJumps:
      push_random({JumpShape::InvGauss, spec.theta, 0.5 + us}, true, true);
      break;
    case LevyFamily::AdditiveGamma:
      if (spec.z < 1.0) push_random({JumpShape::Gamma, spec.theta * (1.0 - spec.z), 1.0 + us}, true, true);
      if (spec.z > 0.0) {
        push_random({JumpShape::Gamma, spec.theta * spec.z, 1.0 + ctx.u1}, true, false);
        push_random({JumpShape::Gamma, spec.theta * spec.z, 1.0 + ctx.u2}, false, true);
      }
      break;
  }

  for (const auto& c : ctx.clusters) {
    if (c.n < 0 || c.m < 0 || c.n + c.m == 0) throw std::invalid_argument("ferguson_klass_draw: empty cluster");
    const int N = c.n + c.m;
    std::array<double, 2> jump{};
    if (spec.family == LevyFamily::InvGaussEqualJumps) {
      const double s = gamma_draw(rng, N - 0.5, 0.5 + us);
      jump = {s, s};
    } else if (spec.family == LevyFamily::GammaEqualJumps || (c.n > 0 && c.m > 0) || spec.z == 0.0) {
      const double s = gamma_draw(rng, N, 1.0 + us);
      jump = {s, s};
    } else {
      // One-sided cluster under the additive intensity: idiosyncratic or common component.
      const int g = c.n > 0 ? 0 : 1;
      const double ug = g == 0 ? ctx.u1 : ctx.u2;
      const double li = std::log(spec.z) - N * std::log1p(ug);
      const double lc = spec.z < 1.0 ? std::log1p(-spec.z) - N * std::log1p(us) : -INFINITY;
      const double p_idio = 1.0 / (1.0 + std::exp(lc - li));
      if (uniform01(rng) < p_idio) {
        jump[g] = gamma_draw(rng, N, 1.0 + ug);
      } else {
        const double s = gamma_draw(rng, N, 1.0 + us);
        jump = {s, s};
      }
    }
    d.fixed_jumps.push_back(jump);

    Atom a(2);
    if (c.n > 0 && c.m > 0) {
      a = c.atom;
    } else {
      const int g = c.n > 0 ? 0 : 1;
      a[g] = c.atom.at(g);
      a[1 - g] = conditional(g0, g, a[g], 1 - g).sample(rng);
    }
    d.fixed_atoms.push_back(std::move(a));
  }

  for (int g = 0; g < 2; ++g) {
    std::array<double, 4> part{};
    for (const auto& j : d.jumps) part[0] += j[g];
    for (std::size_t k = 0; k < ctx.clusters.size(); ++k) {
      const auto& c = ctx.clusters[k];
      const int slot = c.n > 0 && c.m > 0 ? 1 : c.n > 0 ? 2 : 3;
      part[slot] += d.fixed_jumps[k][g];
    }
    double t = 0.0;
    for (double v : part) t += v;
    for (double& v : part) v = t > 0.0 ? v / t : 0.0;
    d.parts[g] = part;
  }
  return d;
}

}  // namespace furbi
