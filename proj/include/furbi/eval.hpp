#pragma once

// Posterior summaries and metrics: density grids, MIAE, CPO statistics,
// Rand index, variation of information, ESS and two-sample KS.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace furbi {

// ---- density grids ----------------------------------------------------------------

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
  if (x.size() != f.size()) throw std::invalid_argument("trapezoid: size mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 2) throw std::invalid_argument("linspace: need at least two points");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = a + (b - a) * i / (n - 1);
  return x;
}

/// Per-iteration density values on a fixed grid.
struct DensityGrid {
  std::vector<double> grid;
  std::vector<std::vector<double>> values;

  explicit DensityGrid(std::vector<double> g = {}) : grid(std::move(g)) {
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("DensityGrid: grid must be strictly increasing");
  }

  void add(std::vector<double> row) {
    if (row.size() != grid.size()) throw std::invalid_argument("DensityGrid: row length differs from the grid");
    values.push_back(std::move(row));
  }

  std::size_t iterations() const { return values.size(); }

  std::vector<double> mean() const {
    std::vector<double> m(grid.size(), 0.0);
    if (values.empty()) return m;
    for (const auto& r : values)
      for (std::size_t j = 0; j < r.size(); ++j) m[j] += r[j];
    for (double& v : m) v /= static_cast<double>(values.size());
    return m;
  }

  /// Pointwise empirical quantile (linear interpolation between order statistics).
  std::vector<double> quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("DensityGrid: quantile level outside [0, 1]");
    std::vector<double> out(grid.size(), 0.0), col(values.size());
    if (values.empty()) return out;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      for (std::size_t t = 0; t < values.size(); ++t) col[t] = values[t][j];
      std::sort(col.begin(), col.end());
      const double pos = q * (col.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, col.size() - 1);
      out[j] = col[lo] + (pos - lo) * (col[hi] - col[lo]);
    }
    return out;
  }

  /// Trapezoid integral of every stored iteration.
  std::vector<double> masses() const {
    std::vector<double> m;
    for (const auto& r : values) m.push_back(trapezoid(grid, r));
    return m;
  }
};

/// Mean integrated absolute error: trapezoid integral of |estimate - truth|.
inline double miae(const std::vector<double>& grid, const std::vector<double>& estimate, const std::vector<double>& truth) {
  if (estimate.size() != grid.size() || truth.size() != grid.size())
    throw std::invalid_argument("miae: estimate, truth and grid must share the grid");
  std::vector<double> d(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) d[i] = std::abs(estimate[i] - truth[i]);
  return trapezoid(grid, d);
}

inline double miae(const std::vector<double>& grid, const std::vector<double>& estimate,
                   const std::function<double(double)>& truth) {
  std::vector<double> t(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) t[i] = truth(grid[i]);
  return miae(grid, estimate, t);
}

// ---- CPO ----------------------------------------------------------------------------

/// Harmonic-mean CPO from per-iteration log densities of one observation.
/// Returns NaN when some density is zero (CPO undefined).
inline double log_cpo(const std::vector<double>& log_dens) {
  if (log_dens.empty()) throw std::invalid_argument("log_cpo: empty trace");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : log_dens) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
    mx = std::max(mx, -v);
  }
  double s = 0.0;
  for (double v : log_dens) s += std::exp(-v - mx);
  // log CPO = -log(mean(1 / f))
  return -(mx + std::log(s / static_cast<double>(log_dens.size())));
}

struct CpoReport {
  std::vector<double> log_cpo;   ///< per observation (NaN where undefined)
  std::vector<int> excluded;     ///< observations with an undefined CPO
  double alcpo = 0.0;            ///< mean of the defined log CPOs
  double mlcpo = 0.0;            ///< median of the defined log CPOs
};

/// `trace[t][i]` is the log density of observation i at stored iteration t.
inline CpoReport cpo_report(const std::vector<std::vector<double>>& trace) {
  if (trace.empty()) throw std::invalid_argument("cpo_report: empty trace");
  const std::size_t n = trace.front().size();
  CpoReport r;
  std::vector<double> col(trace.size()), ok;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < trace.size(); ++t) col[t] = trace[t].at(i);
    const double v = log_cpo(col);
    r.log_cpo.push_back(v);
    if (std::isnan(v)) r.excluded.push_back(static_cast<int>(i));
    else ok.push_back(v);
  }
  if (ok.empty()) throw std::domain_error("cpo_report: no observation has a defined CPO");
  r.alcpo = std::accumulate(ok.begin(), ok.end(), 0.0) / ok.size();
  std::sort(ok.begin(), ok.end());
  const std::size_t h = ok.size() / 2;
  r.mlcpo = ok.size() % 2 ? ok[h] : 0.5 * (ok[h - 1] + ok[h]);
  return r;
}

// ---- partitions -------------------------------------------------------------------

namespace detail {

/// Contingency counts of two label vectors (labels compacted first).
struct Contingency {
  std::vector<double> a, b;
  std::map<std::pair<int, int>, double> ab;
  double n = 0.0;
};

inline Contingency contingency(const std::vector<int>& p1, const std::vector<int>& p2) {
  if (p1.size() != p2.size()) throw std::invalid_argument("partition metrics: partitions differ in length");
  std::map<int, int> m1, m2;
  Contingency c;
  c.n = static_cast<double>(p1.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const int x = m1.try_emplace(p1[i], static_cast<int>(m1.size())).first->second;
    const int y = m2.try_emplace(p2[i], static_cast<int>(m2.size())).first->second;
    if (x >= static_cast<int>(c.a.size())) c.a.resize(x + 1, 0.0);
    if (y >= static_cast<int>(c.b.size())) c.b.resize(y + 1, 0.0);
    c.a[x] += 1.0;
    c.b[y] += 1.0;
    c.ab[{x, y}] += 1.0;
  }
  return c;
}

}  // namespace detail

/// Fraction of pairs on which the two partitions agree (both together or both apart).
inline double rand_index(const std::vector<int>& p1, const std::vector<int>& p2) {
  const auto c = detail::contingency(p1, p2);
  if (c.n < 2) return 1.0;
  auto pairs = [](double k) { return 0.5 * k * (k - 1.0); };
  double sa = 0.0, sb = 0.0, sab = 0.0;
  for (double v : c.a) sa += pairs(v);
  for (double v : c.b) sb += pairs(v);
  for (const auto& [key, v] : c.ab) sab += pairs(v);
  const double total = pairs(c.n);
  return (total - sa - sb + 2.0 * sab) / total;
}

/// Variation of information (natural log).
inline double variation_of_information(const std::vector<int>& p1, const std::vector<int>& p2) {
  const auto c = detail::contingency(p1, p2);
  if (c.n == 0) return 0.0;
  double vi = 0.0;
  for (const auto& [key, v] : c.ab) {
    const double pij = v / c.n;
    vi -= pij * (std::log(v / c.a[key.first]) + std::log(v / c.b[key.second]));
  }
  return std::max(vi, 0.0);
}

/// Among sampled partitions, the one with the smallest average VI distance to
/// all samples; ties go to the earliest. Returns its index.
inline std::size_t vi_point_estimate_index(const std::vector<std::vector<int>>& samples) {
  if (samples.empty()) throw std::invalid_argument("vi_point_estimate: no sampled partitions");
  // Distinct partitions (canonical relabelling) with multiplicities.
  std::map<std::vector<int>, std::size_t> seen;
  std::vector<std::vector<int>> uniq;
  std::vector<std::size_t> first;
  std::vector<double> mult;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    std::map<int, int> relabel;
    std::vector<int> canon(samples[t].size());
    for (std::size_t i = 0; i < canon.size(); ++i)
      canon[i] = relabel.try_emplace(samples[t][i], static_cast<int>(relabel.size())).first->second;
    auto [it, fresh] = seen.try_emplace(canon, uniq.size());
    if (fresh) {
      uniq.push_back(canon);
      first.push_back(t);
      mult.push_back(0.0);
    }
    mult[it->second] += 1.0;
  }
  std::size_t best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < uniq.size(); ++a) {
    double s = 0.0;
    for (std::size_t b = 0; b < uniq.size(); ++b)
      if (a != b) s += mult[b] * variation_of_information(uniq[a], uniq[b]);
    if (s < best_v - 1e-12 * std::max(1.0, best_v) || (std::abs(s - best_v) <= 1e-12 * std::max(1.0, best_v) && first[a] < first[best])) {
      best_v = s;
      best = a;
    }
  }
  return first[best];
}

inline std::vector<int> vi_point_estimate(const std::vector<std::vector<int>>& samples) {
  return samples[vi_point_estimate_index(samples)];
}

inline int num_blocks(const std::vector<int>& p) {
  std::vector<int> s = p;
  std::sort(s.begin(), s.end());
  return static_cast<int>(std::unique(s.begin(), s.end()) - s.begin());
}

// ---- chain diagnostics ------------------------------------------------------------

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;  ///< constant trace; ess is then the trace length
};

/// Effective sample size by the initial monotone sequence estimator.
inline EssResult ess(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 10) throw std::invalid_argument("ess: need at least 10 draws");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  auto autocov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += (x[i] - mean) * (x[i + k] - mean);
    return s / n;
  };
  const double g0 = autocov(0);
  if (!(g0 > 1e-300)) return {static_cast<double>(n), true};
  double sum = 0.0, prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = autocov(2 * m) + autocov(2 * m + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
  }
  const double sigma2 = -g0 + 2.0 * sum;
  return {n * g0 / sigma2, false};
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = a.size(), nb = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  const double lam = (en + 0.12 + 0.11 / en) * d;
  double q = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * 2.0 * std::exp(-2.0 * k * k * lam * lam);
    q += term;
    if (std::abs(term) < 1e-12) break;
    sign = -sign;
  }
  return {d, lam < 1e-3 ? 1.0 : std::clamp(q, 0.0, 1.0)};
}

/// Standard error of the mean of an autocorrelated trace by batch means.
inline double batch_means_stderr(const std::vector<double>& x, int batches = 50) {
  if (static_cast<int>(x.size()) < 2 * batches) throw std::invalid_argument("batch_means_stderr: trace too short");
  const std::size_t bs = x.size() / batches;
  std::vector<double> m(batches, 0.0);
  for (int b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < bs; ++i) m[b] += x[b * bs + i];
    m[b] /= bs;
  }
  const double mu = std::accumulate(m.begin(), m.end(), 0.0) / batches;
  double s = 0.0;
  for (double v : m) s += (v - mu) * (v - mu);
  return std::sqrt(s / (batches - 1) / batches);
}

}  // namespace furbi
