#pragma once

// Marginal Gibbs sampler for n-FuRBI mixtures with conjugate components.
//
// State: one cluster label per observation, the per-cluster atom (only the
// coordinates seen by members are materialized), the auxiliary U (one entry
// per group) and the hyperparameters. An observation of group g is
// reallocated with weights
//   new cluster:       theta tau_{e_g}(U)                * prior predictive
//   existing cluster:  tau_{n_c + e_g}(U) / tau_{n_c}(U) * predictive given the atom
// where the predictive integrates coordinates the cluster has not yet
// materialized. Joining a cluster whose members all come from other groups
// creates a hyper-tie and draws the missing coordinates from their
// conditional law given the atom and the new observation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "furbi/levy.hpp"
#include "furbi/random.hpp"
#include "furbi/samplers/common.hpp"
#include "furbi/special.hpp"

namespace furbi {

namespace detail {

inline double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace detail

/// Normalized allocation weights for one more observation of a group, given
/// the current state: entry 0 is the base measure, entry k >= 1 is cluster
/// `cluster[k-1]`.
struct PredictiveWeights {
  std::vector<double> weights;
  std::vector<int> cluster;
  std::vector<std::vector<int>> counts;  ///< per-group counts of each cluster
};

template <class Components>
class MarginalSampler {
 public:
  using Atom = typename Components::Atom;
  using Value = typename Components::Value;

  struct Cluster {
    Atom atom;
    std::vector<int> counts;
    int size = 0;
  };

  MarginalSampler(LevySpec spec, Components comp, std::vector<int> group, std::vector<Value> values,
                  Hyperpriors priors = {})
      : spec_(spec), comp_(std::move(comp)), group_(std::move(group)), value_(std::move(values)), priors_(priors) {
    spec_.validate();
    G_ = comp_.num_groups();
    if (group_.size() != value_.size()) throw std::invalid_argument("MarginalSampler: one group index per value");
    by_group_.assign(G_, {});
    n_g_.assign(G_, 0);
    for (std::size_t i = 0; i < group_.size(); ++i) {
      const int g = group_[i];
      if (g < 0 || g >= G_) throw std::out_of_range("MarginalSampler: group index out of range");
      if (value_[i].size() != comp_.value_size(g))
        throw std::invalid_argument("MarginalSampler: observation " + std::to_string(i) + " has the wrong dimension");
      by_group_[g].push_back(static_cast<int>(i));
      ++n_g_[g];
    }
    u_.assign(G_, 0.0);
    for (int g = 0; g < G_; ++g) u_[g] = n_g_[g] > 0 ? 1.0 : 0.0;
    label_.assign(group_.size(), -1);
    log_pred_obs_.assign(group_.size(), 0.0);
    u_step_.log_step = std::log(0.5);
    u_steps_each_.assign(G_, AdaptiveStep{std::log(0.5)});
  }

  /// Sequential allocation of every observation in index order.
  void initialize(Rng& rng) {
    clear();
    for (std::size_t i = 0; i < group_.size(); ++i) allocate(static_cast<int>(i), rng);
    for (auto& c : clusters_)
      if (c.size > 0) comp_.refresh(c.atom, rng);
  }

  /// Start from given labels (any integers; equal labels share a cluster).
  void set_labels(const std::vector<int>& labels, Rng& rng) {
    if (labels.size() != group_.size()) throw std::invalid_argument("set_labels: one label per observation");
    clear();
    std::vector<std::pair<int, int>> map;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto it = std::find_if(map.begin(), map.end(), [&](auto p) { return p.first == labels[i]; });
      int c;
      if (it == map.end()) {
        c = new_cluster();
        map.emplace_back(labels[i], c);
      } else {
        c = it->second;
      }
      attach(static_cast<int>(i), c, rng);
    }
    for (auto& c : clusters_)
      if (c.size > 0) comp_.refresh(c.atom, rng);
  }

  /// One full sweep: observations group by group in random order, atoms,
  /// U, then hyperparameters.
  void sweep(Rng& rng, bool adapt = false, int u_steps = 3, bool exact_u = false) {
    for (int g = 0; g < G_; ++g) {
      auto order = by_group_[g];
      std::shuffle(order.begin(), order.end(), rng);
      for (int i : order) {
        detach(i);
        allocate(i, rng);
      }
    }
    for (int k = 0; k < cross_moves_; ++k) cross_group_move(rng);
    for (auto& c : clusters_)
      if (c.size > 0) comp_.refresh(c.atom, rng);
    const auto counts = cluster_counts();
    update_u(spec_, counts, n_g_, u_, u_step_, u_steps, exact_u, adapt, rng);
    if (G_ > 1 && !(exact_u && spec_.family == LevyFamily::GammaEqualJumps))
      update_u_each(spec_, counts, n_g_, u_, u_steps_each_, adapt, rng);
    if (!priors_.theta.fixed) spec_.theta = draw_theta(spec_, priors_.theta, static_cast<int>(counts.size()), u_, rng);
    if (!priors_.z.fixed) update_z(spec_, counts, u_, priors_.z.step, rng);
    std::vector<Atom*> atoms;
    for (auto& c : clusters_)
      if (c.size > 0) atoms.push_back(&c.atom);
    comp_.update_hyper(std::span<Atom* const>(atoms), rng, adapt);
    ++iteration_;
  }

  /// Merge/split proposals across groups per sweep (0 disables them).
  void set_cross_moves(int k) { cross_moves_ = std::max(0, k); }

  /// Metropolis-Hastings move between hyper-tied and separate clusters. A
  /// merge joins two clusters whose member groups are disjoint; a split
  /// divides the member groups of a cluster in two. With conjugate
  /// components the locations are integrated out and redrawn from their
  /// full conditional after an accepted move. Otherwise the two sides must
  /// see disjoint coordinates and both atoms are kept as they are, so the
  /// likelihood does not change and the ratio involves only the priors.
  void cross_group_move(Rng& rng) {
    if (G_ < 2) return;
    const auto saved_clusters = clusters_;
    const auto saved_label = label_;
    const auto saved_free = free_;
    double log_ratio;
    if (uniform01(rng) < 0.5) {
      const auto pairs = merge_pairs();
      if (pairs.empty()) return;
      const auto [a, b] = pairs[uniform_index(rng, pairs.size())];
      const double before = cluster_log_target(clusters_[a]) + cluster_log_target(clusters_[b]);
      const double log_fwd = -std::log(static_cast<double>(pairs.size()));
      merge_into(a, b);
      const double after = cluster_log_target(clusters_[a]);
      const double log_rev = -std::log(static_cast<double>(split_candidates().size())) -
                             std::log(static_cast<double>(bipartitions(clusters_[a]).size()));
      log_ratio = after - before + log_rev - log_fwd;
    } else {
      const auto cands = split_candidates();
      if (cands.empty()) return;
      const int c = cands[uniform_index(rng, cands.size())];
      const auto parts = bipartitions(clusters_[c]);
      const double log_fwd = -std::log(static_cast<double>(cands.size())) - std::log(static_cast<double>(parts.size()));
      const double before = cluster_log_target(clusters_[c]);
      const int d = split_off(c, parts[uniform_index(rng, parts.size())]);
      const double after = cluster_log_target(clusters_[c]) + cluster_log_target(clusters_[d]);
      const double log_rev = -std::log(static_cast<double>(merge_pairs().size()));
      log_ratio = after - before + log_rev - log_fwd;
    }
    ++cross_proposed_;
    if (std::log(uniform01(rng)) < log_ratio) {
      ++cross_accepted_;
      if constexpr (kCollapsed)
        for (auto& c : clusters_)
          if (c.size > 0) comp_.refresh(c.atom, rng);
      return;
    }
    clusters_ = saved_clusters;
    label_ = saved_label;
    free_ = saved_free;
  }

  double cross_acceptance() const { return cross_proposed_ ? double(cross_accepted_) / cross_proposed_ : 0.0; }

  // ---- state access ----

  int num_obs() const { return static_cast<int>(group_.size()); }
  int num_groups() const { return G_; }
  const std::vector<int>& groups() const { return group_; }
  const std::vector<Value>& values() const { return value_; }
  const LevySpec& spec() const { return spec_; }
  LevySpec& spec() { return spec_; }
  const std::vector<double>& u() const { return u_; }
  void set_u(std::vector<double> u) { u_ = std::move(u); }
  Components& components() { return comp_; }
  const Components& components() const { return comp_; }
  long iteration() const { return iteration_; }
  const AdaptiveStep& u_step() const { return u_step_; }

  /// log p(w_i | rest of the state) recorded when observation i was last
  /// reallocated: the normalizer of its allocation step.
  const std::vector<double>& log_pred_obs() const { return log_pred_obs_; }

  /// Labels relabelled 0..K-1 in order of first appearance.
  std::vector<int> labels() const {
    std::vector<int> map(clusters_.size(), -1), out(label_.size());
    int next = 0;
    for (std::size_t i = 0; i < label_.size(); ++i) {
      int& m = map[label_[i]];
      if (m < 0) m = next++;
      out[i] = m;
    }
    return out;
  }

  int cluster_of(int i) const { return label_[i]; }
  const Cluster& cluster(int c) const { return clusters_[c]; }

  std::vector<std::vector<int>> cluster_counts() const {
    std::vector<std::vector<int>> out;
    for (const auto& c : clusters_)
      if (c.size > 0) out.push_back(c.counts);
    return out;
  }

  int num_clusters() const {
    return static_cast<int>(std::count_if(clusters_.begin(), clusters_.end(), [](const Cluster& c) { return c.size > 0; }));
  }

  /// Clusters with members in group g.
  int clusters_in_group(int g) const {
    return static_cast<int>(
        std::count_if(clusters_.begin(), clusters_.end(), [g](const Cluster& c) { return c.size > 0 && c.counts[g] > 0; }));
  }

  /// Clusters with members in at least two groups.
  int num_shared_clusters() const {
    int k = 0;
    for (const auto& c : clusters_) {
      if (c.size == 0) continue;
      int active = 0;
      for (int v : c.counts) active += v > 0;
      k += active > 1;
    }
    return k;
  }

  /// Conditional predictive allocation weights for a new observation of group g.
  PredictiveWeights predictive_weights(int g) const {
    PredictiveWeights pw;
    std::vector<double> lw;
    std::vector<int> e(G_, 0);
    e[g] = 1;
    lw.push_back(std::log(spec_.theta) + log_tau(spec_, std::span<const int>(e), u_for(g)));
    pw.cluster.push_back(-1);
    pw.counts.push_back(std::vector<int>(G_, 0));
    for (std::size_t c = 0; c < clusters_.size(); ++c) {
      if (clusters_[c].size == 0) continue;
      lw.push_back(log_tau_ratio(clusters_[c].counts, g, u_for(g)));
      pw.cluster.push_back(static_cast<int>(c));
      pw.counts.push_back(clusters_[c].counts);
    }
    const double norm = detail::log_sum_exp(lw);
    for (double v : lw) pw.weights.push_back(std::exp(v - norm));
    return pw;
  }

  /// Conditional predictive density of a new observation of group g.
  double log_predictive_density(int g, const Value& w) const {
    const auto uu = u_for(g);
    std::vector<double> lp, lw;
    std::vector<int> e(G_, 0);
    e[g] = 1;
    const double base = std::log(spec_.theta) + log_tau(spec_, std::span<const int>(e), uu);
    lp.push_back(base);
    lw.push_back(base + comp_.log_pred_new(g, w));
    for (const auto& c : clusters_) {
      if (c.size == 0) continue;
      const double r = log_tau_ratio(c.counts, g, uu);
      lp.push_back(r);
      lw.push_back(r + comp_.log_pred(c.atom, g, w));
    }
    return detail::log_sum_exp(lw) - detail::log_sum_exp(lp);
  }

  /// Replace the value of observation i, keeping its cluster and atom.
  void set_value(int i, const Value& w) {
    auto& c = clusters_[label_[i]];
    comp_.replace(c.atom, group_[i], value_[i], w);
    value_[i] = w;
  }

  /// Draw a fresh value for observation i from the kernel of its cluster.
  Value simulate_value(int i, Rng& rng) const { return comp_.simulate(clusters_[label_[i]].atom, group_[i], rng); }

 private:
  static std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  }

  static constexpr bool kCollapsed = requires(const Components& comp, const Atom& a) { comp.log_marginal(a); };

  double cluster_log_target(const Cluster& c) const {
    const double part = std::log(spec_.theta) + log_tau(spec_, std::span<const int>(c.counts), u_);
    if constexpr (kCollapsed) return part + comp_.log_marginal(c.atom);
    else return part + comp_.log_prior(c.atom);
  }

  std::vector<bool> coord_mask(const std::vector<int>& counts) const {
    std::vector<bool> m(comp_.dim(), false);
    for (int g = 0; g < G_; ++g)
      if (counts[g] > 0)
        for (int j : comp_.coords(g)) m[j] = true;
    return m;
  }

  bool separable(const Cluster& a, const Cluster& b) const {
    for (int g = 0; g < G_; ++g)
      if (a.counts[g] > 0 && b.counts[g] > 0) return false;
    if constexpr (kCollapsed) return true;
    const auto ma = coord_mask(a.counts), mb = coord_mask(b.counts);
    for (std::size_t j = 0; j < ma.size(); ++j)
      if (ma[j] && mb[j]) return false;
    return true;
  }

  std::vector<std::pair<int, int>> merge_pairs() const {
    std::vector<std::pair<int, int>> out;
    for (std::size_t a = 0; a < clusters_.size(); ++a) {
      if (clusters_[a].size == 0) continue;
      for (std::size_t b = a + 1; b < clusters_.size(); ++b)
        if (clusters_[b].size > 0 && separable(clusters_[a], clusters_[b]))
          out.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
    return out;
  }

  /// Unordered splits of the member groups of c into two sides (seeing
  /// disjoint coordinates unless the locations are integrated out); each
  /// entry flags the groups of the side that does not hold the first member
  /// group.
  std::vector<std::vector<bool>> bipartitions(const Cluster& c) const {
    std::vector<int> active;
    for (int g = 0; g < G_; ++g)
      if (c.counts[g] > 0) active.push_back(g);
    std::vector<std::vector<bool>> out;
    if (active.size() < 2) return out;
    const std::size_t rest = active.size() - 1;
    for (unsigned long bits = 1; bits < (1UL << rest); ++bits) {
      std::vector<int> ca(G_, 0), cb(G_, 0);
      std::vector<bool> side(G_, false);
      ca[active[0]] = 1;
      for (std::size_t k = 0; k < rest; ++k) {
        const int g = active[k + 1];
        if (bits >> k & 1UL) cb[g] = 1, side[g] = true;
        else ca[g] = 1;
      }
      if constexpr (kCollapsed) {
        out.push_back(std::move(side));
        continue;
      }
      const auto ma = coord_mask(ca), mb = coord_mask(cb);
      bool ok = true;
      for (std::size_t j = 0; j < ma.size(); ++j) ok = ok && !(ma[j] && mb[j]);
      if (ok) out.push_back(std::move(side));
    }
    return out;
  }

  std::vector<int> split_candidates() const {
    std::vector<int> out;
    for (std::size_t c = 0; c < clusters_.size(); ++c)
      if (clusters_[c].size > 0 && !bipartitions(clusters_[c]).empty()) out.push_back(static_cast<int>(c));
    return out;
  }

  void merge_into(int a, int b) {
    auto& A = clusters_[a];
    auto& B = clusters_[b];
    if constexpr (kCollapsed) A.atom = comp_.pool(A.atom, B.atom);
    else A.atom = comp_.combine(A.atom, B.atom);
    for (int g = 0; g < G_; ++g) A.counts[g] += B.counts[g];
    A.size += B.size;
    for (auto& l : label_)
      if (l == b) l = a;
    B = Cluster{comp_.empty_atom(), std::vector<int>(G_, 0), 0};
    free_.push_back(b);
  }

  /// Move the member groups flagged in `side` from cluster c to a new cluster.
  int split_off(int c, const std::vector<bool>& side) {
    const int d = new_cluster();
    auto& C = clusters_[c];
    auto& D = clusters_[d];
    std::vector<int> moved(G_, 0);
    for (int g = 0; g < G_; ++g)
      if (side[g]) moved[g] = C.counts[g];
    if constexpr (kCollapsed) {
      D.atom = comp_.empty_atom();
      Atom rest = comp_.empty_atom();
      rest.mu = C.atom.mu;
      for (std::size_t i = 0; i < label_.size(); ++i)
        if (label_[i] == c) comp_.accumulate(side[group_[i]] ? D.atom : rest, group_[i], value_[i]);
      C.atom = std::move(rest);
    } else {
      const auto mask_d = coord_mask(moved);
      std::vector<bool> mask_c(mask_d.size());
      for (std::size_t j = 0; j < mask_d.size(); ++j) mask_c[j] = !mask_d[j];
      D.atom = comp_.restrict(C.atom, mask_d);
      C.atom = comp_.restrict(C.atom, mask_c);
    }
    for (int g = 0; g < G_; ++g) {
      D.counts[g] = moved[g];
      C.counts[g] -= moved[g];
      D.size += moved[g];
      C.size -= moved[g];
    }
    for (std::size_t i = 0; i < label_.size(); ++i)
      if (label_[i] == c && side[group_[i]]) label_[i] = d;
    return d;
  }

  /// U with zero entries completed for a group that has no observations yet.
  std::vector<double> u_for(int g) const {
    std::vector<double> uu = u_;
    if (!(uu[g] > 0.0)) uu[g] = 1.0;
    return uu;
  }

  double log_tau_ratio(std::vector<int> counts, int g, std::span<const double> u) const {
    const double old_v = log_tau(spec_, std::span<const int>(counts), u);
    ++counts[g];
    const double new_v = log_tau(spec_, std::span<const int>(counts), u);
    if (!std::isfinite(old_v) || !std::isfinite(new_v)) return -std::numeric_limits<double>::infinity();
    return new_v - old_v;
  }

  void clear() {
    clusters_.clear();
    free_.clear();
    std::fill(label_.begin(), label_.end(), -1);
  }

  int new_cluster() {
    if (!free_.empty()) {
      const int c = free_.back();
      free_.pop_back();
      clusters_[c] = Cluster{comp_.empty_atom(), std::vector<int>(G_, 0), 0};
      return c;
    }
    clusters_.push_back(Cluster{comp_.empty_atom(), std::vector<int>(G_, 0), 0});
    return static_cast<int>(clusters_.size()) - 1;
  }

  void attach(int i, int c, Rng& rng) {
    auto& cl = clusters_[c];
    comp_.add(cl.atom, group_[i], value_[i], rng);
    ++cl.counts[group_[i]];
    ++cl.size;
    label_[i] = c;
  }

  void detach(int i) {
    auto& cl = clusters_[label_[i]];
    comp_.remove(cl.atom, group_[i], value_[i]);
    --cl.counts[group_[i]];
    if (--cl.size == 0) free_.push_back(label_[i]);
    label_[i] = -1;
  }

  void allocate(int i, Rng& rng) {
    const int g = group_[i];
    const Value& w = value_[i];
    const auto uu = u_for(g);
    lw_.clear();
    lp_.clear();
    cand_.clear();
    std::vector<int> e(G_, 0);
    e[g] = 1;
    const double base = std::log(spec_.theta) + log_tau(spec_, std::span<const int>(e), uu);
    lp_.push_back(base);
    lw_.push_back(base + comp_.log_pred_new(g, w));
    cand_.push_back(-1);
    for (std::size_t c = 0; c < clusters_.size(); ++c) {
      const auto& cl = clusters_[c];
      if (cl.size == 0) continue;
      const double r = log_tau_ratio(cl.counts, g, uu);
      lp_.push_back(r);
      lw_.push_back(std::isfinite(r) ? r + comp_.log_pred(cl.atom, g, w) : r);
      cand_.push_back(static_cast<int>(c));
    }
    log_pred_obs_[i] = detail::log_sum_exp(lw_) - detail::log_sum_exp(lp_);
    const std::size_t k = categorical_log(rng, lw_);
    const int c = cand_[k] >= 0 ? cand_[k] : new_cluster();
    attach(i, c, rng);
  }

  LevySpec spec_;
  Components comp_;
  std::vector<int> group_;
  std::vector<Value> value_;
  Hyperpriors priors_;
  int G_ = 0;
  std::vector<std::vector<int>> by_group_;
  std::vector<int> n_g_;
  std::vector<double> u_;
  std::vector<int> label_;
  std::vector<Cluster> clusters_;
  std::vector<int> free_;
  std::vector<double> log_pred_obs_;
  AdaptiveStep u_step_;
  std::vector<AdaptiveStep> u_steps_each_;
  long iteration_ = 0;
  int cross_moves_ = 2;
  long cross_proposed_ = 0, cross_accepted_ = 0;
  std::vector<double> lw_, lp_;
  std::vector<int> cand_;
};

}  // namespace furbi
