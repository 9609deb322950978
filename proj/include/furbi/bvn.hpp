#pragma once

// Standard bivariate normal CDF.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "furbi/quadrature.hpp"
#include "furbi/special.hpp"

namespace furbi {

namespace detail {

/// Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton iteration.
template <int N>
struct GaussLegendre {
  std::array<double, N> x{};
  std::array<double, N> w{};

  GaussLegendre() {
    for (int i = 0; i < (N + 1) / 2; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= N; ++k) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = N * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = -z;
      x[N - 1 - i] = z;
      w[i] = w[N - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

inline const GaussLegendre<32>& gauss_legendre_32() {
  static const GaussLegendre<32> rule;
  return rule;
}

}  // namespace detail

/// P(X <= x, Y <= y) for a standard bivariate normal with correlation rho.
///
/// Uses Phi2 = Phi(x)Phi(y) + (1/2pi) int_0^{asin rho} exp(-(x^2+y^2-2xy sin t)/(2cos^2 t)) dt.
/// The 32-point Gauss-Legendre value is accepted when it agrees with an
/// adaptive Gauss-Kronrod estimate; otherwise the adaptive value is returned.
/// |rho| >= 1 is handled by its degenerate limits. Infinite x or y are allowed.
inline double bvn_cdf(double x, double y, double rho) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (std::isnan(x) || std::isnan(y) || std::isnan(rho)) return std::numeric_limits<double>::quiet_NaN();
  if (x == -inf || y == -inf) return 0.0;
  if (x == inf) return normal_cdf(y);
  if (y == inf) return normal_cdf(x);
  if (rho >= 1.0) return normal_cdf(std::min(x, y));
  if (rho <= -1.0) return std::max(0.0, normal_cdf(x) - normal_cdf(-y));

  const double upper = std::asin(rho);
  if (upper == 0.0) return normal_cdf(x) * normal_cdf(y);
  const double sxx = x * x + y * y;
  const double sxy = 2.0 * x * y;
  auto integrand = [&](double t) {
    const double c = std::cos(t);
    return std::exp(-(sxx - sxy * std::sin(t)) / (2.0 * c * c));
  };

  const auto& gl = detail::gauss_legendre_32();
  const double half = 0.5 * upper;
  double fixed = 0.0;
  for (int i = 0; i < 32; ++i) fixed += gl.w[i] * integrand(half + half * gl.x[i]);
  fixed *= half;

  QuadratureConfig cfg;
  cfg.rel_tol = 1e-13;
  cfg.abs_tol = 1e-14;
  cfg.max_subdivisions = 400;
  double adaptive;
  try {
    adaptive = integrate(integrand, 0.0, upper, cfg).value;
  } catch (const QuadratureError& e) {
    adaptive = e.estimate();
  }
  const double integral = std::abs(adaptive - fixed) < 1e-13 ? fixed : adaptive;
  const double value = normal_cdf(x) * normal_cdf(y) + integral / (2.0 * std::numbers::pi);
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace furbi
