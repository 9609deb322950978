#pragma once

// Truncated stick-breaking (blocked) Gibbs sampler for equal-jumps gamma
// n-FuRBI mixtures: the groups share the Dirichlet-process weights and each
// atom is one latent Gaussian vector from G0.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "furbi/random.hpp"
#include "furbi/samplers/common.hpp"
#include "furbi/samplers/gaussian_components.hpp"
#include "furbi/samplers/marginal.hpp"

namespace furbi {

/// Weights from sticks V_1..V_N (V_N is taken as 1).
inline std::vector<double> stick_weights(const std::vector<double>& v) {
  std::vector<double> w(v.size());
  double rest = 1.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double vk = k + 1 == v.size() ? 1.0 : v[k];
    w[k] = rest * vk;
    rest *= 1.0 - vk;
  }
  return w;
}

class BlockedGibbs {
 public:
  BlockedGibbs(double theta, ThetaPrior prior, GaussianComponents comp, std::vector<int> group,
               std::vector<Eigen::VectorXd> values, int truncation)
      : theta_(theta), prior_(prior), comp_(std::move(comp)), group_(std::move(group)), value_(std::move(values)),
        N_(truncation) {
    if (N_ < 1) throw std::invalid_argument("BlockedGibbs: truncation must be at least 1");
    if (!(theta_ > 0.0)) throw std::invalid_argument("BlockedGibbs: theta must be positive");
    if (group_.size() != value_.size()) throw std::invalid_argument("BlockedGibbs: one group index per value");
    for (std::size_t i = 0; i < group_.size(); ++i) {
      if (group_[i] < 0 || group_[i] >= comp_.num_groups()) throw std::out_of_range("BlockedGibbs: group out of range");
      if (value_[i].size() != comp_.value_size(group_[i]))
        throw std::invalid_argument("BlockedGibbs: observation has the wrong dimension");
    }
    label_.assign(group_.size(), 0);
    log_pred_obs_.assign(group_.size(), 0.0);
  }

  /// Sticks and atoms from the prior, then one allocation pass.
  void initialize(Rng& rng) {
    v_.assign(N_, 1.0);
    for (int k = 0; k + 1 < N_; ++k) v_[k] = beta_draw(rng, 1.0, theta_);
    w_ = stick_weights(v_);
    atoms_.assign(N_, comp_.empty_atom());
    for (auto& a : atoms_) comp_.refresh_full(a, rng);
    allocate(rng);
  }

  void sweep(Rng& rng, bool adapt = false) {
    allocate(rng);
    // Sticks: V_k ~ Beta(1 + n_k, theta + sum_{l > k} n_l).
    std::vector<int> n(N_, 0);
    for (int l : label_) ++n[l];
    int above = static_cast<int>(label_.size());
    for (int k = 0; k + 1 < N_; ++k) {
      above -= n[k];
      v_[k] = beta_draw(rng, 1.0 + n[k], theta_ + above);
      v_[k] = std::min(v_[k], 1.0 - 1e-16);
    }
    w_ = stick_weights(v_);
    std::vector<GaussAtom*> ptrs;
    for (auto& a : atoms_) ptrs.push_back(&a);
    comp_.update_hyper(std::span<GaussAtom* const>(ptrs), rng, adapt);
    for (auto& a : atoms_) comp_.refresh_full(a, rng);
    if (!prior_.fixed) {
      double s = 0.0;
      for (int k = 0; k + 1 < N_; ++k) s -= std::log1p(-v_[k]);
      theta_ = gamma_draw(rng, prior_.shape + N_ - 1, prior_.rate + s);
    }
  }

  int truncation() const { return N_; }
  double theta() const { return theta_; }
  const std::vector<double>& weights() const { return w_; }
  const std::vector<GaussAtom>& atoms() const { return atoms_; }
  const std::vector<int>& raw_labels() const { return label_; }
  GaussianComponents& components() { return comp_; }
  const GaussianComponents& components() const { return comp_; }
  int num_obs() const { return static_cast<int>(group_.size()); }
  const std::vector<int>& groups() const { return group_; }
  const std::vector<Eigen::VectorXd>& values() const { return value_; }

  /// log sum_k W_k f(w_i | atom_k) at the last allocation of observation i.
  const std::vector<double>& log_pred_obs() const { return log_pred_obs_; }

  std::vector<int> labels() const {
    std::vector<int> map(N_, -1), out(label_.size());
    int next = 0;
    for (std::size_t i = 0; i < label_.size(); ++i) {
      if (map[label_[i]] < 0) map[label_[i]] = next++;
      out[i] = map[label_[i]];
    }
    return out;
  }

  int num_clusters() const {
    std::vector<char> used(N_, 0);
    for (int l : label_) used[l] = 1;
    int k = 0;
    for (char c : used) k += c;
    return k;
  }

  /// Mixture density of group g at w under the current weights and atoms.
  double log_density(int g, const Eigen::VectorXd& w) const {
    std::vector<double> lw(N_);
    for (int k = 0; k < N_; ++k) lw[k] = std::log(w_[k]) + comp_.log_kernel(atoms_[k], g, w);
    return detail::log_sum_exp(lw);
  }

 private:
  void allocate(Rng& rng) {
    for (auto& a : atoms_) {
      a.cnt.setZero();
      a.sum.setZero();
      a.sumsq.setZero();
    }
    std::vector<double> lw(N_);
    for (std::size_t i = 0; i < group_.size(); ++i) {
      const int g = group_[i];
      for (int k = 0; k < N_; ++k) lw[k] = std::log(w_[k]) + comp_.log_kernel(atoms_[k], g, value_[i]);
      log_pred_obs_[i] = detail::log_sum_exp(lw);
      const int k = static_cast<int>(categorical_log(rng, lw));
      label_[i] = k;
      const auto& S = comp_.base().groups[g];
      auto& a = atoms_[k];
      for (std::size_t j = 0; j < S.size(); ++j) {
        a.cnt[S[j]] += 1.0;
        a.sum[S[j]] += value_[i][j];
        a.sumsq[S[j]] += value_[i][j] * value_[i][j];
      }
    }
  }

  double theta_;
  ThetaPrior prior_;
  GaussianComponents comp_;
  std::vector<int> group_;
  std::vector<Eigen::VectorXd> value_;
  int N_;
  std::vector<double> v_, w_;
  std::vector<GaussAtom> atoms_;
  std::vector<int> label_;
  std::vector<double> log_pred_obs_;
};

}  // namespace furbi
