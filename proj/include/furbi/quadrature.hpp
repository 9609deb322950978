#pragma once

// Adaptive Gauss-Kronrod quadrature on finite intervals, the half line and the
// positive quadrant. Half-line integrals use the map u = t / (1 - t).

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace furbi {

/// Change of variables used to bring the half line onto (0, 1).
enum class HalfLineMap {
  Rational,     ///< u = map_scale * (t / (1 - t))^map_power
  Logarithmic,  ///< u = -log(1 - t)
};

struct QuadratureConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  int max_subdivisions = 200;
  HalfLineMap map = HalfLineMap::Rational;
  double map_power = 1.0;  ///< exponent of the rational map; raise for algebraic tails
  double map_scale = 1.0;  ///< length scale of the rational map

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw std::invalid_argument("QuadratureConfig: tolerances must be positive");
    if (!(map_scale > 0.0)) throw std::invalid_argument("QuadratureConfig: map_scale must be positive");
    if (!(map_power >= 1.0)) throw std::invalid_argument("QuadratureConfig: map_power must be >= 1");
    if (max_subdivisions < 1)
      throw std::invalid_argument("QuadratureConfig: max_subdivisions must be >= 1");
  }
};

/// Raised when the adaptive scheme runs out of subdivisions; carries the best
/// estimate reached so callers can decide whether it is usable.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(double estimate, double error_bound)
      : std::runtime_error(make_message(estimate, error_bound)),
        estimate_(estimate),
        error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  static std::string make_message(double est, double err) {
    std::ostringstream os;
    os << "quadrature did not converge: estimate " << est << ", error bound " << err;
    return os.str();
  }
  double estimate_;
  double error_bound_;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

namespace detail {

struct Gk15 {
  static constexpr double xgk[8] = {0.991455371120812639206854697526329,
                                    0.949107912342758524526189684047851,
                                    0.864864423359769072789712788640926,
                                    0.741531185599394439863864773280788,
                                    0.586087235467691130294144845693013,
                                    0.405845151377397166906606412076961,
                                    0.207784955007898467600689403773245,
                                    0.000000000000000000000000000000000};
  static constexpr double wgk[8] = {0.022935322010529224963732008058970,
                                    0.063092092629978553290700663189204,
                                    0.104790010322250183839876322541518,
                                    0.140653259715525918745189590510238,
                                    0.169004726639267902826583426598550,
                                    0.190350578064785409913256402421014,
                                    0.204432940075298892414161999234649,
                                    0.209482141084727828012999174891714};
  static constexpr double wg[4] = {0.129484966168869693270611432679082,
                                   0.279705391489276667901467771423780,
                                   0.381830050505118944950369775488975,
                                   0.417959183673469387755102040816327};
};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15_panel(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * Gk15::wgk[7];
  double gauss = fc * Gk15::wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * Gk15::xgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    kron += Gk15::wgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += Gk15::wg[j / 2] * (f1 + f2);
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive GK15 on [a, b]. Throws QuadratureError if the requested
/// tolerance is not met within cfg.max_subdivisions panels.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureConfig& cfg = {}) {
  cfg.validate();
  // Start from a few equal panels so a single deceptively smooth GK15
  // estimate cannot end the refinement early.
  constexpr int kInitialPanels = 4;
  std::priority_queue<detail::Panel> heap;
  double total = 0.0, err = 0.0;
  for (int i = 0; i < kInitialPanels; ++i) {
    const double lo = a + (b - a) * i / kInitialPanels;
    const double hi = i + 1 == kInitialPanels ? b : a + (b - a) * (i + 1) / kInitialPanels;
    auto p = detail::gk15_panel(f, lo, hi);
    total += p.value;
    err += p.error;
    heap.push(p);
  }
  int used = kInitialPanels;
  auto tolerance = [&] { return std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total)); };
  while (err > tolerance() && used < cfg.max_subdivisions) {
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::gk15_panel(f, worst.a, mid);
    auto right = detail::gk15_panel(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++used;
  }
  // Recompute the sums from the panels to shed accumulated rounding.
  double v = 0.0, e = 0.0;
  while (!heap.empty()) {
    v += heap.top().value;
    e += heap.top().error;
    heap.pop();
  }
  if (e > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(v))) throw QuadratureError(v, e);
  return {v, e, used};
}

/// int_0^inf f(u) du via the map selected in cfg.
template <class F>
QuadratureResult integrate_half_line(F&& f, const QuadratureConfig& cfg = {}) {
  const bool rational = cfg.map == HalfLineMap::Rational;
  const double k = cfg.map_power;
  const double c = cfg.map_scale;
  auto mapped = [&f, rational, k, c](double t) {
    if (t >= 1.0 || t <= 0.0) return 0.0;
    const double one_minus = 1.0 - t;
    if (!rational) {
      const double val = f(-std::log1p(-t));
      return val == 0.0 ? 0.0 : val / one_minus;
    }
    const double r = t / one_minus;
    const double u = c * (k == 1.0 ? r : std::pow(r, k));
    if (!std::isfinite(u)) return 0.0;
    const double val = f(u);
    if (val == 0.0) return 0.0;
    // du/dt = k r^{k-1} / (1 - t)^2
    const double jac = c * (k == 1.0 ? 1.0 : k * std::pow(r, k - 1.0)) / (one_minus * one_minus);
    return val * jac;
  };
  return integrate(mapped, 0.0, 1.0, cfg);
}

/// int_{R_+^2} f(u1, u2) du1 du2 by nested half-line quadrature. The inner
/// integral runs at a tighter tolerance so its error does not dominate, and
/// its map is stretched by (1 + u1) so features that move outwards with u1
/// (integrands depending on u1 + u2) stay resolved.
template <class F>
QuadratureResult integrate_posneg_2d(F&& f, const QuadratureConfig& cfg = {}) {
  cfg.validate();
  QuadratureConfig inner = cfg;
  inner.rel_tol = cfg.rel_tol * 0.1;
  inner.abs_tol = cfg.abs_tol * 0.1;
  auto outer = [&](double u1) {
    QuadratureConfig c = inner;
    c.map_scale = cfg.map_scale * (1.0 + u1);
    return integrate_half_line([&](double u2) { return f(u1, u2); }, c).value;
  };
  return integrate_half_line(outer, cfg);
}

}  // namespace furbi
