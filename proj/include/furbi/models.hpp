#pragma once

// Model assembly: datasets, model configurations, a type-erased chain over
// the marginal and blocked samplers (plus the exchangeable and independent
// baselines), the run loop that records traces, and synthetic generators.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "furbi/base_measure.hpp"
#include "furbi/eval.hpp"
#include "furbi/levy.hpp"
#include "furbi/random.hpp"
#include "furbi/samplers.hpp"

namespace furbi {

// ---- data -----------------------------------------------------------------------------

struct Standardization {
  bool applied = false;
  std::vector<double> mean;  ///< per latent coordinate
  std::vector<double> sd;
};

/// Observations split into groups. Each group observes a fixed subset of the
/// latent coordinates; `values[i]` lists the observed coordinates of
/// observation i in the order of `group_coords[group[i]]`.
struct Dataset {
  int dim = 0;
  std::vector<std::vector<int>> group_coords;
  std::vector<int> group;
  std::vector<Eigen::VectorXd> values;
  std::vector<int> row;  ///< original row index
  std::vector<std::string> columns;
  Standardization transform;

  int num_groups() const { return static_cast<int>(group_coords.size()); }
  int num_obs() const { return static_cast<int>(group.size()); }
  bool univariate() const { return std::all_of(group_coords.begin(), group_coords.end(), [](const auto& c) { return c.size() == 1; }); }

  std::vector<int> group_sizes() const {
    std::vector<int> n(num_groups(), 0);
    for (int g : group) ++n[g];
    return n;
  }

  /// Values of group g (univariate groups only).
  std::vector<double> sample(int g) const {
    std::vector<double> out;
    for (int i = 0; i < num_obs(); ++i)
      if (group[i] == g) out.push_back(values[i][0]);
    return out;
  }

  void validate() const {
    if (num_obs() == 0) throw std::invalid_argument("dataset: no observations");
    if (values.size() != group.size() || row.size() != group.size())
      throw std::invalid_argument("dataset: group, values and row lengths differ");
    for (const auto& c : group_coords) {
      if (c.empty()) throw std::invalid_argument("dataset: group observing no coordinate");
      for (int j : c)
        if (j < 0 || j >= dim) throw std::invalid_argument("dataset: coordinate out of range");
    }
    for (int i = 0; i < num_obs(); ++i) {
      if (group[i] < 0 || group[i] >= num_groups()) throw std::invalid_argument("dataset: group index out of range");
      if (values[i].size() != static_cast<int>(group_coords[group[i]].size()))
        throw std::invalid_argument("dataset: observation " + std::to_string(i) + " has the wrong length");
      for (int k = 0; k < values[i].size(); ++k)
        if (!std::isfinite(values[i][k])) throw std::invalid_argument("dataset: non-finite value at row " + std::to_string(row[i]));
    }
  }
};

/// One univariate sample per group; group g observes latent coordinate g.
inline Dataset dataset_from_samples(const std::vector<std::vector<double>>& samples) {
  Dataset d;
  d.dim = static_cast<int>(samples.size());
  int r = 0;
  for (std::size_t g = 0; g < samples.size(); ++g) {
    d.group_coords.push_back({static_cast<int>(g)});
    d.columns.push_back("y" + std::to_string(g + 1));
    for (double v : samples[g]) {
      d.group.push_back(static_cast<int>(g));
      d.values.push_back(Eigen::VectorXd::Constant(1, v));
      d.row.push_back(r++);
    }
  }
  return d;
}

/// Split rows with missing entries (NaN) into groups by their set of missing
/// columns. Groups are ordered by number of missing entries, then
/// lexicographically by the missing set; rows keep their original order.
inline Dataset missing_pattern_split(const Eigen::MatrixXd& raw, std::vector<std::string> columns = {}) {
  const int P = static_cast<int>(raw.cols());
  if (P < 2) throw std::invalid_argument("missing_pattern_split: need at least two columns");
  std::vector<std::vector<int>> missing(raw.rows());
  for (int r = 0; r < raw.rows(); ++r) {
    for (int j = 0; j < P; ++j)
      if (std::isnan(raw(r, j))) missing[r].push_back(j);
    if (static_cast<int>(missing[r].size()) == P)
      throw std::invalid_argument("missing_pattern_split: row " + std::to_string(r) + " has no observed entry");
  }
  std::vector<std::vector<int>> patterns = missing;
  std::sort(patterns.begin(), patterns.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  patterns.erase(std::unique(patterns.begin(), patterns.end()), patterns.end());
  Dataset d;
  d.dim = P;
  d.columns = columns.empty() ? std::vector<std::string>{} : columns;
  if (d.columns.empty())
    for (int j = 0; j < P; ++j) d.columns.push_back("y" + std::to_string(j + 1));
  for (const auto& miss : patterns) {
    std::vector<int> obs;
    for (int j = 0; j < P; ++j)
      if (!std::binary_search(miss.begin(), miss.end(), j)) obs.push_back(j);
    d.group_coords.push_back(obs);
  }
  for (std::size_t p = 0; p < patterns.size(); ++p)
    for (int r = 0; r < raw.rows(); ++r) {
      if (missing[r] != patterns[p]) continue;
      const auto& obs = d.group_coords[p];
      Eigen::VectorXd v(obs.size());
      for (std::size_t k = 0; k < obs.size(); ++k) v[k] = raw(r, obs[k]);
      d.group.push_back(static_cast<int>(p));
      d.values.push_back(v);
      d.row.push_back(r);
    }
  return d;
}

/// Reassemble the raw matrix (NaN where missing), rows in original order.
inline Eigen::MatrixXd recombine(const Dataset& d) {
  const int rows = d.row.empty() ? 0 : *std::max_element(d.row.begin(), d.row.end()) + 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(rows, d.dim, std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < d.num_obs(); ++i) {
    const auto& obs = d.group_coords[d.group[i]];
    for (std::size_t k = 0; k < obs.size(); ++k) m(d.row[i], obs[k]) = d.values[i][k];
  }
  return m;
}

/// Centre and scale every latent coordinate by the mean and standard
/// deviation of all its observed values.
inline void standardize(Dataset& d) {
  std::vector<double> s(d.dim, 0.0), ss(d.dim, 0.0), n(d.dim, 0.0);
  for (int i = 0; i < d.num_obs(); ++i) {
    const auto& obs = d.group_coords[d.group[i]];
    for (std::size_t k = 0; k < obs.size(); ++k) {
      s[obs[k]] += d.values[i][k];
      ss[obs[k]] += d.values[i][k] * d.values[i][k];
      n[obs[k]] += 1.0;
    }
  }
  d.transform.applied = true;
  d.transform.mean.assign(d.dim, 0.0);
  d.transform.sd.assign(d.dim, 1.0);
  for (int j = 0; j < d.dim; ++j) {
    if (n[j] < 2) continue;
    const double m = s[j] / n[j];
    const double var = (ss[j] - n[j] * m * m) / (n[j] - 1.0);
    d.transform.mean[j] = m;
    d.transform.sd[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  for (int i = 0; i < d.num_obs(); ++i) {
    const auto& obs = d.group_coords[d.group[i]];
    for (std::size_t k = 0; k < obs.size(); ++k)
      d.values[i][k] = (d.values[i][k] - d.transform.mean[obs[k]]) / d.transform.sd[obs[k]];
  }
}

/// All observations in one group observing coordinate 0 (univariate data).
inline Dataset pooled(const Dataset& d) {
  if (!d.univariate()) throw std::invalid_argument("pooled: only univariate samples can be pooled");
  Dataset p = d;
  p.dim = 1;
  p.group_coords = {{0}};
  std::fill(p.group.begin(), p.group.end(), 0);
  return p;
}

/// The observations of one group, as a single-group dataset.
inline Dataset group_subset(const Dataset& d, int g, std::vector<int>* index = nullptr) {
  Dataset s;
  s.dim = static_cast<int>(d.group_coords[g].size());
  std::vector<int> coords(s.dim);
  std::iota(coords.begin(), coords.end(), 0);
  s.group_coords = {coords};
  for (int c : d.group_coords[g]) s.columns.push_back(c < static_cast<int>(d.columns.size()) ? d.columns[c] : "");
  for (int i = 0; i < d.num_obs(); ++i) {
    if (d.group[i] != g) continue;
    s.group.push_back(0);
    s.values.push_back(d.values[i]);
    s.row.push_back(d.row[i]);
    if (index) index->push_back(i);
  }
  return s;
}

// ---- configuration --------------------------------------------------------------------

enum class ModelKind {
  TwoSampleGaussianKnownVar,
  TwoSampleNIG,
  MultiGroupGaussian,
  MissingDataClustering,
  ExchangeableBaseline,
  IndependentBaseline,
};
enum class KernelKind { Gaussian, GaussianNIG };
enum class SamplerKind { Marginal, Blocked };

inline std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::TwoSampleGaussianKnownVar: return "two_sample_gaussian";
    case ModelKind::TwoSampleNIG: return "two_sample_nig";
    case ModelKind::MultiGroupGaussian: return "multi_group_gaussian";
    case ModelKind::MissingDataClustering: return "missing_data_clustering";
    case ModelKind::ExchangeableBaseline: return "exchangeable";
    case ModelKind::IndependentBaseline: return "independent";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  for (auto m : {ModelKind::TwoSampleGaussianKnownVar, ModelKind::TwoSampleNIG, ModelKind::MultiGroupGaussian,
                 ModelKind::MissingDataClustering, ModelKind::ExchangeableBaseline, ModelKind::IndependentBaseline})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown model '" + s + "'");
}

struct ModelConfig {
  ModelKind model = ModelKind::TwoSampleGaussianKnownVar;
  LevySpec spec;
  /// Atom law. For MissingDataClustering the groups are taken from the data;
  /// the baselines use the marginals of this base measure.
  BaseMeasure g0 = bivariate_gaussian(0.0, 1.0, 0.0);
  KernelKind kernel = KernelKind::Gaussian;
  Eigen::VectorXd kernel_var = Eigen::VectorXd::Ones(2);  ///< per latent coordinate
  Hyperpriors hyper;
  McmcConfig mcmc;
  SamplerKind sampler = SamplerKind::Marginal;
  int truncation = 30;  ///< blocked sampler only
};

namespace detail {

/// Marginal base measure of latent coordinate j as a one-group base.
inline BaseMeasure marginal_base(const BaseMeasure& g0, int j) {
  if (g0.family == BaseFamily::NormalInvGammaPair) {
    NigParams p = *g0.nig;
    if (j == 1) {
      p.lambda1 = p.lambda2;
      p.alpha1 = p.alpha2;
      p.beta1 = p.beta2;
    }
    return normal_inv_gamma_single(g0.mean[j], p);
  }
  return single_group_gaussian(Eigen::VectorXd::Constant(1, g0.mean[j]), Eigen::VectorXd::Constant(1, g0.scale[j]),
                               Eigen::MatrixXd::Identity(1, 1));
}

}  // namespace detail

/// The base measure the dependent model runs with on this data.
inline BaseMeasure resolved_base(const ModelConfig& c, const Dataset& d) {
  BaseMeasure g = c.g0;
  if (c.model == ModelKind::MissingDataClustering) g.groups = d.group_coords;
  return g;
}

/// Throws std::invalid_argument describing the first unsupported choice.
inline void validate(const ModelConfig& c, const Dataset& d) {
  d.validate();
  c.spec.validate();
  c.mcmc.validate();
  const BaseMeasure g = resolved_base(c, d);
  g.validate();
  const bool nig_base = g.family == BaseFamily::NormalInvGammaPair;
  if ((c.kernel == KernelKind::GaussianNIG) != nig_base)
    throw std::invalid_argument("model: the Normal-InverseGamma kernel needs the Normal-InverseGamma base and vice versa");
  if (!nig_base) {
    if (c.kernel_var.size() != g.latent_dim())
      throw std::invalid_argument("model: kernel_var needs one entry per latent coordinate");
    for (int j = 0; j < c.kernel_var.size(); ++j)
      if (!(c.kernel_var[j] > 0.0)) throw std::invalid_argument("model: kernel variances must be positive");
  }
  if (c.sampler == SamplerKind::Blocked) {
    if (c.spec.family != LevyFamily::GammaEqualJumps)
      throw std::invalid_argument("model: the blocked sampler needs gamma equal jumps");
    if (nig_base) throw std::invalid_argument("model: the blocked sampler needs the Gaussian kernel with known variance");
    if (c.truncation < 1) throw std::invalid_argument("model: truncation must be positive");
  }
  const bool baseline = c.model == ModelKind::ExchangeableBaseline || c.model == ModelKind::IndependentBaseline;
  if (baseline) {
    if (c.model == ModelKind::ExchangeableBaseline && !d.univariate())
      throw std::invalid_argument("model: the exchangeable baseline pools univariate samples only");
    for (const auto& gc : d.group_coords)
      for (int j : gc)
        if (j >= g.latent_dim()) throw std::invalid_argument("model: data coordinate outside the base measure");
    return;
  }
  if (g.num_groups() != d.num_groups())
    throw std::invalid_argument("model: base measure has " + std::to_string(g.num_groups()) + " groups, data has " +
                                std::to_string(d.num_groups()));
  for (int k = 0; k < g.num_groups(); ++k)
    if (g.groups[k] != d.group_coords[k]) throw std::invalid_argument("model: group coordinates differ between base and data");
  switch (c.model) {
    case ModelKind::TwoSampleGaussianKnownVar:
      if (d.num_groups() != 2 || !d.univariate() || nig_base)
        throw std::invalid_argument("model: two_sample_gaussian needs two univariate samples and a Gaussian base");
      break;
    case ModelKind::TwoSampleNIG:
      if (d.num_groups() != 2 || !nig_base) throw std::invalid_argument("model: two_sample_nig needs two samples and the NIG base");
      break;
    case ModelKind::MultiGroupGaussian:
      if (d.num_groups() < 2 || nig_base) throw std::invalid_argument("model: multi_group_gaussian needs at least two groups");
      break;
    case ModelKind::MissingDataClustering:
      if (nig_base || d.dim < 2) throw std::invalid_argument("model: missing_data_clustering needs a P-variate Gaussian base, P >= 2");
      if (g.latent_dim() != d.dim) throw std::invalid_argument("model: base dimension differs from the number of columns");
      break;
    default:
      break;
  }
}

// ---- chains -----------------------------------------------------------------------------

/// A runnable posterior sampler over a dataset.
class Chain {
 public:
  virtual ~Chain() = default;
  virtual void initialize(Rng& rng) = 0;
  virtual void sweep(Rng& rng, bool adapt) = 0;
  virtual int num_obs() const = 0;
  virtual std::vector<int> labels() const = 0;
  virtual int num_clusters() const = 0;
  /// log density of each observation given the rest, from its last reallocation.
  virtual std::vector<double> log_pred_obs() const = 0;
  /// log density of a new univariate observation of group g given the state.
  virtual double log_density(int g, double w) const = 0;
  virtual bool has_density(int g) const = 0;
  virtual std::vector<std::pair<std::string, double>> state() const = 0;
};

template <class Components>
class MarginalChain : public Chain {
 public:
  MarginalChain(const LevySpec& spec, Components comp, const Dataset& d, Hyperpriors hp, int u_steps, bool exact_u)
      : s_(spec, std::move(comp), d.group, d.values, hp), u_steps_(u_steps), exact_u_(exact_u) {
    for (const auto& c : d.group_coords) univariate_.push_back(c.size() == 1);
  }
  void initialize(Rng& rng) override { s_.initialize(rng); }
  void sweep(Rng& rng, bool adapt) override { s_.sweep(rng, adapt, u_steps_, exact_u_); }
  int num_obs() const override { return s_.num_obs(); }
  std::vector<int> labels() const override { return s_.labels(); }
  int num_clusters() const override { return s_.num_clusters(); }
  std::vector<double> log_pred_obs() const override { return s_.log_pred_obs(); }
  bool has_density(int g) const override { return univariate_.at(g); }
  double log_density(int g, double w) const override {
    return s_.log_predictive_density(g, Eigen::VectorXd::Constant(1, w));
  }
  std::vector<std::pair<std::string, double>> state() const override {
    std::vector<std::pair<std::string, double>> out{{"k", s_.num_clusters()}, {"shared", s_.num_shared_clusters()},
                                                    {"theta", s_.spec().theta}};
    if (s_.spec().family == LevyFamily::AdditiveGamma) out.emplace_back("z", s_.spec().z);
    for (std::size_t g = 0; g < s_.u().size(); ++g) out.emplace_back("u" + std::to_string(g + 1), s_.u()[g]);
    for (auto& kv : s_.components().hyper_values()) out.push_back(kv);
    return out;
  }
  const MarginalSampler<Components>& sampler() const { return s_; }

 private:
  MarginalSampler<Components> s_;
  int u_steps_;
  bool exact_u_;
  std::vector<bool> univariate_;
};

class BlockedChain : public Chain {
 public:
  BlockedChain(double theta, ThetaPrior prior, GaussianComponents comp, const Dataset& d, int truncation)
      : b_(theta, prior, std::move(comp), d.group, d.values, truncation) {
    for (const auto& c : d.group_coords) univariate_.push_back(c.size() == 1);
  }
  void initialize(Rng& rng) override { b_.initialize(rng); }
  void sweep(Rng& rng, bool adapt) override { b_.sweep(rng, adapt); }
  int num_obs() const override { return b_.num_obs(); }
  std::vector<int> labels() const override { return b_.labels(); }
  int num_clusters() const override { return b_.num_clusters(); }
  std::vector<double> log_pred_obs() const override { return b_.log_pred_obs(); }
  bool has_density(int g) const override { return univariate_.at(g); }
  double log_density(int g, double w) const override { return b_.log_density(g, Eigen::VectorXd::Constant(1, w)); }
  std::vector<std::pair<std::string, double>> state() const override {
    std::vector<std::pair<std::string, double>> out{{"k", b_.num_clusters()}, {"theta", b_.theta()}};
    for (auto& kv : b_.components().hyper_values()) out.push_back(kv);
    return out;
  }

 private:
  BlockedGibbs b_;
  std::vector<bool> univariate_;
};

/// Exchangeable baseline: one chain on the pooled data; every group shares
/// its predictive density.
class PooledChain : public Chain {
 public:
  PooledChain(std::unique_ptr<Chain> inner, int groups) : inner_(std::move(inner)), groups_(groups) {}
  void initialize(Rng& rng) override { inner_->initialize(rng); }
  void sweep(Rng& rng, bool adapt) override { inner_->sweep(rng, adapt); }
  int num_obs() const override { return inner_->num_obs(); }
  std::vector<int> labels() const override { return inner_->labels(); }
  int num_clusters() const override { return inner_->num_clusters(); }
  std::vector<double> log_pred_obs() const override { return inner_->log_pred_obs(); }
  bool has_density(int g) const override { return g >= 0 && g < groups_ && inner_->has_density(0); }
  double log_density(int, double w) const override { return inner_->log_density(0, w); }
  std::vector<std::pair<std::string, double>> state() const override { return inner_->state(); }

 private:
  std::unique_ptr<Chain> inner_;
  int groups_;
};

/// Independent baseline: one chain per group, run one after the other.
class IndependentChain : public Chain {
 public:
  IndependentChain(std::vector<std::unique_ptr<Chain>> parts, std::vector<std::vector<int>> index, int n)
      : parts_(std::move(parts)), index_(std::move(index)), n_(n) {}
  void initialize(Rng& rng) override {
    for (auto& p : parts_) p->initialize(rng);
  }
  void sweep(Rng& rng, bool adapt) override {
    for (auto& p : parts_) p->sweep(rng, adapt);
  }
  int num_obs() const override { return n_; }
  std::vector<int> labels() const override {
    std::vector<int> out(n_, 0);
    int offset = 0;
    for (std::size_t g = 0; g < parts_.size(); ++g) {
      const auto l = parts_[g]->labels();
      int mx = -1;
      for (std::size_t k = 0; k < l.size(); ++k) {
        out[index_[g][k]] = l[k] + offset;
        mx = std::max(mx, l[k]);
      }
      offset += mx + 1;
    }
    return out;
  }
  int num_clusters() const override {
    int k = 0;
    for (const auto& p : parts_) k += p->num_clusters();
    return k;
  }
  std::vector<double> log_pred_obs() const override {
    std::vector<double> out(n_, 0.0);
    for (std::size_t g = 0; g < parts_.size(); ++g) {
      const auto l = parts_[g]->log_pred_obs();
      for (std::size_t k = 0; k < l.size(); ++k) out[index_[g][k]] = l[k];
    }
    return out;
  }
  bool has_density(int g) const override { return g >= 0 && g < static_cast<int>(parts_.size()) && parts_[g]->has_density(0); }
  double log_density(int g, double w) const override { return parts_.at(g)->log_density(0, w); }
  std::vector<std::pair<std::string, double>> state() const override {
    std::vector<std::pair<std::string, double>> out{{"k", num_clusters()}};
    for (std::size_t g = 0; g < parts_.size(); ++g)
      for (auto& [k, v] : parts_[g]->state())
        if (k != "k") out.emplace_back("g" + std::to_string(g + 1) + "_" + k, v);
    return out;
  }

 private:
  std::vector<std::unique_ptr<Chain>> parts_;
  std::vector<std::vector<int>> index_;
  int n_;
};

namespace detail {

inline std::unique_ptr<Chain> build_dependent(const ModelConfig& c, const Dataset& d, const BaseMeasure& g) {
  if (g.family == BaseFamily::NormalInvGammaPair)
    return std::make_unique<MarginalChain<NigComponents>>(c.spec, NigComponents(g, c.hyper.corr), d, c.hyper,
                                                          c.mcmc.u_steps, c.mcmc.exact_u);
  GaussianComponents comp(g, c.kernel_var, c.hyper.corr, c.hyper.kernel_var);
  if (c.sampler == SamplerKind::Blocked)
    return std::make_unique<BlockedChain>(c.spec.theta, c.hyper.theta, std::move(comp), d, c.truncation);
  return std::make_unique<MarginalChain<GaussianComponents>>(c.spec, std::move(comp), d, c.hyper, c.mcmc.u_steps,
                                                             c.mcmc.exact_u);
}

/// Single-sample model on `d` (one group observing coordinate `coord` of the base).
inline std::unique_ptr<Chain> build_single(const ModelConfig& c, const Dataset& d, int coord) {
  ModelConfig s = c;
  s.g0 = marginal_base(c.g0, coord);
  if (c.g0.family != BaseFamily::NormalInvGammaPair) s.kernel_var = Eigen::VectorXd::Constant(1, c.kernel_var[coord]);
  s.hyper.corr.fixed = true;
  return build_dependent(s, d, s.g0);
}

}  // namespace detail

/// Wire the sampler for a validated configuration.
inline std::unique_ptr<Chain> build(const ModelConfig& c, const Dataset& d) {
  validate(c, d);
  if (c.model == ModelKind::ExchangeableBaseline)
    return std::make_unique<PooledChain>(detail::build_single(c, pooled(d), 0), d.num_groups());
  if (c.model == ModelKind::IndependentBaseline) {
    if (!d.univariate()) throw std::invalid_argument("model: the independent baseline needs univariate samples");
    std::vector<std::unique_ptr<Chain>> parts;
    std::vector<std::vector<int>> index(d.num_groups());
    for (int g = 0; g < d.num_groups(); ++g) {
      Dataset s = group_subset(d, g, &index[g]);
      if (s.num_obs() == 0) throw std::invalid_argument("model: independent baseline with an empty group");
      parts.push_back(detail::build_single(c, s, d.group_coords[g][0]));
    }
    return std::make_unique<IndependentChain>(std::move(parts), std::move(index), d.num_obs());
  }
  return detail::build_dependent(c, d, resolved_base(c, d));
}

// ---- running ----------------------------------------------------------------------------

struct RunOptions {
  /// Density grid per group (empty: no density for that group).
  std::vector<std::vector<double>> grids;
  int density_every = 1;    ///< evaluate densities every k-th stored draw
  int partition_every = 1;  ///< keep every k-th stored partition
  bool keep_log_pred = true;
  int threads = 1;
};

struct RunResult {
  std::vector<std::string> trace_names;
  std::vector<std::vector<double>> traces;  ///< one row per stored draw (first column: chain)
  std::vector<std::vector<int>> partitions;
  std::vector<std::vector<double>> log_pred;  ///< stored draw x observation
  std::vector<DensityGrid> densities;         ///< per group; empty grid when not requested
  double seconds = 0.0;

  std::vector<double> trace(const std::string& name) const {
    const auto it = std::find(trace_names.begin(), trace_names.end(), name);
    if (it == trace_names.end()) throw std::out_of_range("no trace named '" + name + "'");
    const std::size_t j = it - trace_names.begin();
    std::vector<double> out;
    for (const auto& r : traces) out.push_back(r[j]);
    return out;
  }
};

namespace detail {

inline RunResult run_one(const ModelConfig& c, const Dataset& d, const RunOptions& opt, int chain) {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(c.mcmc.seed + 7919ULL * static_cast<std::uint64_t>(chain));
  auto ch = build(c, d);
  ch->initialize(rng);
  RunResult r;
  for (std::size_t g = 0; g < opt.grids.size(); ++g) {
    if (!opt.grids[g].empty() && !ch->has_density(static_cast<int>(g)))
      throw std::invalid_argument("run: density requested for multivariate group " + std::to_string(g));
    r.densities.emplace_back(opt.grids[g]);
  }
  long stored = 0;
  for (int t = 0; t < c.mcmc.iters; ++t) {
    const bool burn = t < c.mcmc.burn_in;
    ch->sweep(rng, burn && c.mcmc.adapt);
    if (burn || (t - c.mcmc.burn_in) % c.mcmc.thin != 0) continue;
    const auto st = ch->state();
    if (r.trace_names.empty()) {
      r.trace_names.push_back("chain");
      for (const auto& kv : st) r.trace_names.push_back(kv.first);
    }
    std::vector<double> row{static_cast<double>(chain)};
    for (const auto& kv : st) row.push_back(kv.second);
    r.traces.push_back(std::move(row));
    if (stored % opt.partition_every == 0) r.partitions.push_back(ch->labels());
    if (opt.keep_log_pred) r.log_pred.push_back(ch->log_pred_obs());
    if (stored % opt.density_every == 0)
      for (std::size_t g = 0; g < opt.grids.size(); ++g) {
        if (opt.grids[g].empty()) continue;
        std::vector<double> f(opt.grids[g].size());
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::exp(ch->log_density(static_cast<int>(g), opt.grids[g][k]));
        r.densities[g].add(std::move(f));
      }
    ++stored;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace detail

/// Run `mcmc.chains` chains (seeds derived from `mcmc.seed`) and concatenate
/// their stored draws in chain order.
inline RunResult run_chains(const ModelConfig& c, const Dataset& d, const RunOptions& opt = {}) {
  validate(c, d);
  std::vector<RunResult> parts(c.mcmc.chains);
  const int threads = std::max(1, opt.threads);
  for (int start = 0; start < c.mcmc.chains; start += threads) {
    std::vector<std::future<RunResult>> fut;
    for (int k = start; k < std::min(c.mcmc.chains, start + threads); ++k)
      fut.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred,
                               [&, k] { return detail::run_one(c, d, opt, k); }));
    for (std::size_t k = 0; k < fut.size(); ++k) parts[start + k] = fut[k].get();
  }
  RunResult out = std::move(parts[0]);
  for (std::size_t k = 1; k < parts.size(); ++k) {
    auto& p = parts[k];
    out.traces.insert(out.traces.end(), p.traces.begin(), p.traces.end());
    out.partitions.insert(out.partitions.end(), p.partitions.begin(), p.partitions.end());
    out.log_pred.insert(out.log_pred.end(), p.log_pred.begin(), p.log_pred.end());
    for (std::size_t g = 0; g < out.densities.size(); ++g)
      for (auto& row : p.densities[g].values) out.densities[g].add(std::move(row));
    out.seconds += p.seconds;
  }
  return out;
}

// ---- generators -------------------------------------------------------------------------

/// Two univariate samples: n draws from N(10, 1) and m from N(v_mean, 1).
inline Dataset generate_two_sample(Rng& rng, double v_mean, int n = 20, int m = 100, double w_mean = 10.0) {
  std::vector<std::vector<double>> s(2);
  for (int i = 0; i < n; ++i) s[0].push_back(w_mean + std_normal(rng));
  for (int j = 0; j < m; ++j) s[1].push_back(v_mean + std_normal(rng));
  return dataset_from_samples(s);
}

/// Three univariate samples of size n from N(10, 1), N(-10, 1) and N(x, 1).
inline Dataset generate_three_group(Rng& rng, double x, int n = 20) {
  std::vector<std::vector<double>> s(3);
  const double means[3] = {10.0, -10.0, x};
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < n; ++i) s[g].push_back(means[g] + std_normal(rng));
  return dataset_from_samples(s);
}

enum class MissingMechanism { MCAR, MNAR };

struct MissingScenario {
  int n = 300;
  MissingMechanism mechanism = MissingMechanism::MCAR;
  double mcar_prob = 0.16;  ///< per-entry missing probability (MCAR)
  /// Per-cluster, per-variable missing probabilities (MNAR). Each of the
  /// first three clusters loses entries of one variable only.
  std::vector<std::vector<double>> mnar_prob{{0.6, 0.0, 0.0}, {0.0, 0.6, 0.0}, {0.0, 0.0, 0.6}, {0.0, 0.0, 0.0}};
  std::vector<double> weights{0.3, 0.25, 0.25, 0.2};
  std::vector<std::vector<double>> centers{{2.0, 2.0, 2.0}, {-2.0, -2.0, -2.0}, {2.0, -2.0, 0.0}, {-2.0, 2.0, 0.0}};
  double sd = 0.8;
};

struct MissingData {
  Eigen::MatrixXd complete;
  Eigen::MatrixXd observed;  ///< NaN where missing
  std::vector<int> truth;    ///< true cluster per row
};

/// Gaussian clusters in R^P with entries removed MCAR or with
/// cluster-dependent probabilities; rows left with no entry are redrawn.
inline MissingData generate_missing(Rng& rng, const MissingScenario& sc) {
  const int K = static_cast<int>(sc.weights.size());
  const int P = static_cast<int>(sc.centers.at(0).size());
  if (static_cast<int>(sc.centers.size()) != K) throw std::invalid_argument("generate_missing: one center per cluster");
  MissingData out;
  out.complete.resize(sc.n, P);
  out.observed.resize(sc.n, P);
  std::vector<double> lw;
  for (double w : sc.weights) lw.push_back(std::log(w));
  for (int r = 0; r < sc.n; ++r) {
    const int k = static_cast<int>(categorical_log(rng, lw));
    out.truth.push_back(k);
    for (int j = 0; j < P; ++j) out.complete(r, j) = sc.centers[k][j] + sc.sd * std_normal(rng);
    while (true) {
      int seen = 0;
      for (int j = 0; j < P; ++j) {
        const double p = sc.mechanism == MissingMechanism::MCAR ? sc.mcar_prob : sc.mnar_prob.at(k).at(j);
        const bool miss = uniform01(rng) < p;
        out.observed(r, j) = miss ? std::numeric_limits<double>::quiet_NaN() : out.complete(r, j);
        seen += !miss;
      }
      if (seen > 0) break;
    }
  }
  return out;
}

/// Two samples of returns-like data sharing a three-component mixture
/// shape. With sign = -1 the second sample's components are the negated
/// components of the first (negatively related samples); with sign = +1
/// they coincide. The second sample is shifted by `offset`.
inline Dataset generate_mirrored(Rng& rng, int n = 49, int m = 55, double sign = -1.0, double offset = 2.5) {
  const double loc[3] = {-2.5, 0.0, 0.8};
  const double sd[3] = {0.3, 0.25, 0.25};
  const double w[3] = {0.15, 0.5, 0.35};
  std::vector<std::vector<double>> s(2);
  for (int g = 0; g < 2; ++g) {
    const int size = g == 0 ? n : m;
    const double a = g == 0 ? 1.0 : sign;
    const double b = g == 0 ? 0.0 : offset;
    for (int i = 0; i < size; ++i) {
      const double u = uniform01(rng);
      const int k = u < w[0] ? 0 : u < w[0] + w[1] ? 1 : 2;
      s[g].push_back(b + a * loc[k] + sd[k] * std_normal(rng));
    }
  }
  return dataset_from_samples(s);
}

}  // namespace furbi
