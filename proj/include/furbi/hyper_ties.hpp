#pragma once

// Compatible hyper-tie structures between the k distinct values of the first
// sample and the c distinct values of the second, and their label-array
// encoding.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "furbi/base_measure.hpp"
#include "furbi/levy.hpp"
#include "furbi/quadrature.hpp"

namespace furbi {

/// Pairs (i, j) with i in {0..k}, j in {0..c}; i = 0 or j = 0 marks a value
/// seen in one sample only. Indices are 1-based, pairs kept sorted.
struct HyperTieState {
  std::vector<std::pair<int, int>> pairs;
  int k = 0;
  int c = 0;
  std::vector<int> n;  ///< multiplicity of each X value (size k); may be empty
  std::vector<int> m;  ///< multiplicity of each Y value (size c); may be empty

  void canonicalize() { std::sort(pairs.begin(), pairs.end()); }

  int num_hyper_ties() const {
    return static_cast<int>(std::count_if(pairs.begin(), pairs.end(), [](auto p) { return p.first && p.second; }));
  }
  int num_x_only() const {
    return static_cast<int>(std::count_if(pairs.begin(), pairs.end(), [](auto p) { return p.first && !p.second; }));
  }
  int num_y_only() const {
    return static_cast<int>(std::count_if(pairs.begin(), pairs.end(), [](auto p) { return !p.first && p.second; }));
  }

  bool operator==(const HyperTieState& o) const { return k == o.k && c == o.c && pairs == o.pairs; }
};

/// Returns a description of the first violated compatibility clause, or
/// nullopt when the structure is compatible.
inline std::optional<std::string> validate(const HyperTieState& p) {
  std::vector<int> seen_x(p.k + 1, 0), seen_y(p.c + 1, 0);
  for (auto [i, j] : p.pairs) {
    if (i < 0 || i > p.k || j < 0 || j > p.c) return "index out of range";
    if (i > 0) ++seen_x[i];
    if (j > 0) ++seen_y[j];
  }
  for (int i = 1; i <= p.k; ++i)
    if (seen_x[i] != 1) return "X value " + std::to_string(i) + " must appear in exactly one pair";
  for (int j = 1; j <= p.c; ++j)
    if (seen_y[j] != 1) return "Y value " + std::to_string(j) + " must appear in exactly one pair";
  for (auto [i, j] : p.pairs)
    if (i == 0 && j == 0) return "pair (0, 0) is not allowed";
  if (!p.n.empty() && static_cast<int>(p.n.size()) != p.k) return "multiplicity vector n has wrong length";
  if (!p.m.empty() && static_cast<int>(p.m.size()) != p.c) return "multiplicity vector m has wrong length";
  return std::nullopt;
}

/// Number of compatible structures: sum_j C(k,j) C(c,j) j!.
inline double count_structures(int k, int c) {
  double total = 0.0;
  for (int j = 0; j <= std::min(k, c); ++j)
    total += std::exp(log_gamma(k + 1.0) - log_gamma(k - j + 1.0) - log_gamma(j + 1.0) + log_gamma(c + 1.0) -
                      log_gamma(c - j + 1.0));
  return std::round(total);
}

/// All compatible structures for (k, c). Throws when there would be more than
/// 10^6 of them.
inline std::vector<HyperTieState> enumerate_structures(int k, int c) {
  if (k < 0 || c < 0 || k + c < 1) throw std::invalid_argument("enumerate_structures: need k + c >= 1");
  if (count_structures(k, c) > 1e6)
    throw std::length_error("enumerate_structures: more than 1e6 structures; use the samplers instead");
  std::vector<HyperTieState> out;
  std::vector<int> match(k + 1, 0);
  std::vector<bool> used(c + 1, false);
  auto emit = [&] {
    HyperTieState p;
    p.k = k;
    p.c = c;
    for (int i = 1; i <= k; ++i) p.pairs.emplace_back(i, match[i]);
    for (int j = 1; j <= c; ++j)
      if (!used[j]) p.pairs.emplace_back(0, j);
    p.canonicalize();
    out.push_back(std::move(p));
  };
  auto rec = [&](auto&& self, int i) -> void {
    if (i > k) {
      emit();
      return;
    }
    match[i] = 0;
    self(self, i + 1);
    for (int j = 1; j <= c; ++j) {
      if (used[j]) continue;
      used[j] = true;
      match[i] = j;
      self(self, i + 1);
      used[j] = false;
    }
    match[i] = 0;
  };
  rec(rec, 1);
  return out;
}

/// One cluster label per observation; a label used in both arrays is a hyper-tie.
struct LabelArrays {
  std::vector<int> c_x;
  std::vector<int> c_y;

  /// Relabels to 0..K-1 in order of first appearance (X block then Y block).
  void compact() {
    std::map<int, int> remap;
    for (int& l : c_x) l = remap.try_emplace(l, static_cast<int>(remap.size())).first->second;
    for (int& l : c_y) l = remap.try_emplace(l, static_cast<int>(remap.size())).first->second;
  }
};

/// The structure induced by a labelling, together with the index of the
/// distinct value (1-based, per sample) each observation points to.
struct LabelledStructure {
  HyperTieState state;
  std::vector<int> x_value;  ///< per X observation, in 1..k
  std::vector<int> y_value;  ///< per Y observation, in 1..c
};

inline LabelledStructure labels_to_structure(const LabelArrays& l) {
  LabelledStructure out;
  std::map<int, int> xi, yj;
  for (int lab : l.c_x) {
    auto [it, fresh] = xi.try_emplace(lab, static_cast<int>(xi.size()) + 1);
    if (fresh) out.state.n.push_back(0);
    ++out.state.n[it->second - 1];
    out.x_value.push_back(it->second);
  }
  for (int lab : l.c_y) {
    auto [it, fresh] = yj.try_emplace(lab, static_cast<int>(yj.size()) + 1);
    if (fresh) out.state.m.push_back(0);
    ++out.state.m[it->second - 1];
    out.y_value.push_back(it->second);
  }
  out.state.k = static_cast<int>(xi.size());
  out.state.c = static_cast<int>(yj.size());
  for (auto [lab, i] : xi) {
    auto it = yj.find(lab);
    out.state.pairs.emplace_back(i, it == yj.end() ? 0 : it->second);
  }
  for (auto [lab, j] : yj)
    if (!xi.count(lab)) out.state.pairs.emplace_back(0, j);
  out.state.canonicalize();
  return out;
}

/// Inverse of labels_to_structure up to a permutation of labels: one label per pair.
inline LabelArrays structure_to_labels(const LabelledStructure& s) {
  std::vector<int> label_of_x(s.state.k + 1, -1), label_of_y(s.state.c + 1, -1);
  int next = 0;
  for (auto [i, j] : s.state.pairs) {
    if (i) label_of_x[i] = next;
    if (j) label_of_y[j] = next;
    ++next;
  }
  LabelArrays l;
  for (int v : s.x_value) l.c_x.push_back(label_of_x.at(v));
  for (int v : s.y_value) l.c_y.push_back(label_of_y.at(v));
  return l;
}

/// Unnormalized posterior mass of a structure given the distinct values
///   theta^{|p|} prod g_{i,j} * int int u1^{n-1} u2^{m-1} prod tau_{n_i, m_j}(u) e^{-psi_b(u)} du,
/// where g_{i,j} is the G0 density of a hyper-tied pair and the P0 density of
/// a one-sided value. The constant 1/(Gamma(n) Gamma(m)) is omitted. A sample
/// with no observations contributes no u-integral (its u is zero).
inline double structure_mass(const HyperTieState& p, const LevySpec& spec, const BaseMeasure& g0,
                             const std::vector<Eigen::VectorXd>& x_values, const std::vector<Eigen::VectorXd>& y_values,
                             QuadratureConfig cfg = {}) {
  if (auto v = validate(p)) throw std::invalid_argument("structure_mass: " + *v);
  if (static_cast<int>(p.n.size()) != p.k || static_cast<int>(p.m.size()) != p.c)
    throw std::invalid_argument("structure_mass: multiplicities required");
  if (static_cast<int>(x_values.size()) != p.k || static_cast<int>(y_values.size()) != p.c)
    throw std::invalid_argument("structure_mass: one value per distinct observation required");
  double log_g = 0.0;
  for (auto [i, j] : p.pairs) {
    if (i && j) log_g += log_g0_density(g0, Atom{x_values[i - 1], y_values[j - 1]});
    else if (i) log_g += log_p0_density(g0, 0, x_values[i - 1]);
    else log_g += log_p0_density(g0, 1, y_values[j - 1]);
  }
  if (!std::isfinite(log_g)) return 0.0;
  log_g += static_cast<double>(p.pairs.size()) * std::log(spec.theta);

  int n = 0, m = 0;
  for (int v : p.n) n += v;
  for (int v : p.m) m += v;
  auto log_integrand = [&](double u1, double u2) {
    double s = -psi_b(spec, u1, u2);
    if (n > 1) s += (n - 1) * std::log(u1);
    if (m > 1) s += (m - 1) * std::log(u2);
    for (auto [i, j] : p.pairs) s += log_tau(spec, i ? p.n[i - 1] : 0, j ? p.m[j - 1] : 0, u1, u2);
    return s;
  };
  if (spec.family != LevyFamily::InvGaussEqualJumps) cfg.map_power = std::max(cfg.map_power, 2.0 / spec.theta);
  double integral;
  if (n > 0 && m > 0) {
    integral = integrate_posneg_2d([&](double a, double b) { return std::exp(log_integrand(a, b)); }, cfg).value;
  } else if (n > 0) {
    integral = integrate_half_line([&](double a) { return std::exp(log_integrand(a, 0.0)); }, cfg).value;
  } else {
    integral = integrate_half_line([&](double b) { return std::exp(log_integrand(0.0, b)); }, cfg).value;
  }
  return std::exp(log_g) * integral;
}

}  // namespace furbi
