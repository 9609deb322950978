#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "furbi/special.hpp"

namespace furbi {

namespace detail {

inline bool is_nonpositive_integer(double a) { return a <= 0.0 && a == std::floor(a); }

// Plain partial sums of 3F2(a; b; 1). Stops when the relative term drops below
// 1e-12 (or after max_terms); the remaining tail is estimated from the
// algebraic decay term_k ~ C k^{-1-excess}.
inline double hyp3f2_series(const std::array<double, 3>& a, const std::array<double, 2>& b,
                            double excess, long max_terms) {
  double term = 1.0;
  double sum = 1.0;
  for (long k = 0; k < max_terms; ++k) {
    const double kk = static_cast<double>(k);
    term *= (a[0] + kk) * (a[1] + kk) * (a[2] + kk) / ((b[0] + kk) * (b[1] + kk) * (kk + 1.0));
    sum += term;
    if (term == 0.0) return sum;
    if (std::abs(term) < 1e-12 * std::abs(sum) && k > 16) {
      // int_{K}^{inf} C x^{-1-e} dx = term_K * K / e
      const double tail = term * (kk + 1.0) / excess;
      return sum + tail;
    }
  }
  throw std::domain_error("hyp3f2_unit: series did not converge within the term cap");
}

}  // namespace detail

/// 3F2(a1, a2, a3; b1, b2; 1).
///
/// Converges iff the parameter excess s = b1 + b2 - a1 - a2 - a3 is positive.
/// The terms decay only like k^{-1-s}, so when s is small the series is first
/// mapped through Thomae's relation
///   3F2(a,b,c;d,e;1) = G(d)G(e)G(s) / (G(a)G(s+b)G(s+c)) 3F2(d-a,e-a,s; s+b,s+c; 1),
/// whose excess is a (the largest upper parameter is chosen as a).
inline double hyp3f2_unit(double a1, double a2, double a3, double b1, double b2) {
  constexpr long kMaxTerms = 1'000'000;
  if (detail::is_nonpositive_integer(b1) || detail::is_nonpositive_integer(b2))
    throw std::domain_error("hyp3f2_unit: lower parameter is a non-positive integer");
  std::array<double, 3> a{a1, a2, a3};
  std::array<double, 2> b{b1, b2};
  // Terminating series: exact finite sum.
  for (double ai : a) {
    if (detail::is_nonpositive_integer(ai)) {
      double term = 1.0, sum = 1.0;
      const long n = static_cast<long>(-ai);
      for (long k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k);
        term *= (a[0] + kk) * (a[1] + kk) * (a[2] + kk) / ((b[0] + kk) * (b[1] + kk) * (kk + 1.0));
        sum += term;
      }
      return sum;
    }
  }
  const double s = b1 + b2 - a1 - a2 - a3;
  if (!(s > 0.0)) throw std::domain_error("hyp3f2_unit: divergent at unit argument (excess <= 0)");

  std::sort(a.begin(), a.end(), [](double x, double y) { return x > y; });
  const double big = a[0];
  const bool gamma_args_ok =
      b1 > 0.0 && b2 > 0.0 && big > 0.0 && s + a[1] > 0.0 && s + a[2] > 0.0;
  if (s < 2.0 && big > s && gamma_args_ok) {
    const double log_pref = log_gamma(b1) + log_gamma(b2) + log_gamma(s) - log_gamma(big) -
                            log_gamma(s + a[1]) - log_gamma(s + a[2]);
    const double sign = 1.0;
    const std::array<double, 3> ta{b1 - big, b2 - big, s};
    const std::array<double, 2> tb{s + a[1], s + a[2]};
    for (double ai : ta) {
      if (detail::is_nonpositive_integer(ai)) {
        double term = 1.0, sum = 1.0;
        const long n = static_cast<long>(-ai);
        for (long k = 0; k < n; ++k) {
          const double kk = static_cast<double>(k);
          term *= (ta[0] + kk) * (ta[1] + kk) * (ta[2] + kk) /
                  ((tb[0] + kk) * (tb[1] + kk) * (kk + 1.0));
          sum += term;
        }
        return sign * std::exp(log_pref) * sum;
      }
    }
    return sign * std::exp(log_pref) * detail::hyp3f2_series(ta, tb, big, kMaxTerms);
  }
  return detail::hyp3f2_series({a1, a2, a3}, b, s, kMaxTerms);
}

/// Gauss summation 2F1(a, b; c; 1) = G(c)G(c-a-b) / (G(c-a)G(c-b)), c - a - b > 0.
inline double hyp2f1_unit(double a, double b, double c) {
  if (!(c - a - b > 0.0)) throw std::domain_error("hyp2f1_unit: divergent at unit argument");
  return std::exp(log_gamma(c) + log_gamma(c - a - b) - log_gamma(c - a) - log_gamma(c - b));
}

}  // namespace furbi
