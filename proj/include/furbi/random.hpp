#pragma once

// Random variate helpers on top of <random>. All samplers take the engine by
// reference so runs are reproducible from a single seed.

#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace furbi {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  // (0, 1): avoids log(0) in callers.
  std::uniform_real_distribution<double> d(std::numeric_limits<double>::min(), 1.0);
  return d(rng);
}

inline double std_normal(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

/// Gamma(shape, rate).
inline double gamma_draw(Rng& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::domain_error("gamma_draw: shape and rate must be positive");
  std::gamma_distribution<double> d(shape, 1.0 / rate);
  return d(rng);
}

inline double beta_draw(Rng& rng, double a, double b) {
  const double x = gamma_draw(rng, a, 1.0);
  const double y = gamma_draw(rng, b, 1.0);
  if (x + y == 0.0) return a / (a + b);
  return x / (x + y);
}

inline double exponential_draw(Rng& rng, double rate) {
  return -std::log(uniform01(rng)) / rate;
}

/// Index drawn proportionally to exp(log_w[i]).
inline std::size_t categorical_log(Rng& rng, std::span<const double> log_w) {
  if (log_w.empty()) throw std::invalid_argument("categorical_log: empty weights");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : log_w) mx = std::max(mx, v);
  if (!std::isfinite(mx)) throw std::domain_error("categorical_log: no finite weight");
  double total = 0.0;
  for (double v : log_w) total += std::exp(v - mx);
  double r = uniform01(rng) * total;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    r -= std::exp(log_w[i] - mx);
    if (r <= 0.0) return i;
  }
  for (std::size_t i = log_w.size(); i-- > 0;)
    if (std::isfinite(log_w[i])) return i;
  return log_w.size() - 1;
}

/// Draw from the density proportional to t^p exp(-a t^2 + b t) on t > 0,
/// p >= 0, a > 0. The log density is concave, so a three-piece envelope
/// (flat around the mode, exponential tangents outside the points where the
/// log density has dropped by one) gives an exact rejection sampler.
inline double sample_power_gauss(Rng& rng, double p, double a, double b) {
  if (!(p >= 0.0) || !(a > 0.0) || !std::isfinite(b))
    throw std::domain_error("sample_power_gauss: need p >= 0, a > 0, finite b");
  auto h = [&](double t) { return (p > 0.0 ? p * std::log(t) : 0.0) - a * t * t + b * t; };
  auto dh = [&](double t) { return p / t - 2.0 * a * t + b; };

  const double mode = (b + std::sqrt(b * b + 8.0 * a * p)) / (4.0 * a);
  const double hm = mode > 0.0 ? h(mode) : 0.0;  // mode = 0 only when p = 0, b <= 0

  // Right anchor: h(tr) = hm - 1.
  const double scale = 1.0 / std::sqrt(2.0 * a);
  double lo = mode, hi = mode + scale;
  while (h(hi) > hm - 1.0) hi += (hi - mode) + scale;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > hm - 1.0 ? lo : hi) = mid;
  }
  const double tr = hi;

  // Left anchor, if the density drops by one before reaching zero.
  double tl = 0.0;
  const double h0 = p > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
  if (mode > 0.0 && h0 < hm - 1.0) {
    lo = 0.0;
    hi = mode;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * mode; ++i) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) > hm - 1.0 ? hi : lo) = mid;
    }
    tl = lo;
    if (tl <= 0.0) tl = hi;
  }

  const double sr = dh(tr);  // < 0
  const double hr = h(tr) - hm;
  const double area_mid = tr - tl;
  const double area_right = std::exp(hr) / -sr;
  double sl = 0.0, hl = 0.0, area_left = 0.0;
  if (tl > 0.0) {
    sl = dh(tl);  // > 0
    hl = h(tl) - hm;
    area_left = std::exp(hl) * -std::expm1(-sl * tl) / sl;
  }
  const double total = area_left + area_mid + area_right;

  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double pick = uniform01(rng) * total;
    double t, env;
    if (pick < area_mid) {
      t = tl + uniform01(rng) * area_mid;
      env = 0.0;
    } else if (pick < area_mid + area_right) {
      t = tr + exponential_draw(rng, -sr);
      env = hr + sr * (t - tr);
    } else {
      // Truncated exponential on (0, tl) increasing towards tl.
      const double e = -std::log1p(uniform01(rng) * std::expm1(-sl * tl)) / sl;
      t = tl - e;
      if (!(t > 0.0)) continue;
      env = hl + sl * (t - tl);
    }
    if (std::log(uniform01(rng)) <= h(t) - hm - env) return t;
  }
  throw std::runtime_error("sample_power_gauss: rejection sampler failed to accept");
}

}  // namespace furbi
