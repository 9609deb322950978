#include <gtest/gtest.h>

#include <set>

#include "furbi/dependence.hpp"
#include "furbi/hyper_ties.hpp"

using namespace furbi;

namespace {

HyperTieState make_state(int k, int c, std::vector<std::pair<int, int>> pairs) {
  HyperTieState p;
  p.k = k;
  p.c = c;
  p.pairs = std::move(pairs);
  p.canonicalize();
  return p;
}

// Brute force: every function from X values to {0..c} that is injective on
// non-zero targets.
int brute_force_count(int k, int c) {
  int total = 0;
  std::vector<int> f(k, 0);
  while (true) {
    std::set<int> used;
    bool ok = true;
    for (int v : f)
      if (v) ok = ok && used.insert(v).second;
    total += ok;
    int pos = 0;
    while (pos < k && ++f[pos] > c) f[pos++] = 0;
    if (pos == k) break;
  }
  return total;
}

}  // namespace

TEST(HyperTies, ValidateExamples) {
  EXPECT_FALSE(validate(make_state(2, 1, {{1, 1}, {2, 0}})).has_value());
  EXPECT_TRUE(validate(make_state(2, 1, {{1, 1}, {2, 1}})).has_value());
  EXPECT_TRUE(validate(make_state(0, 0, {{0, 0}})).has_value());
  EXPECT_TRUE(validate(make_state(2, 1, {{1, 1}})).has_value());
}

TEST(HyperTies, EnumerationExamples) {
  const auto s21 = enumerate_structures(2, 1);
  ASSERT_EQ(s21.size(), 3u);
  std::vector<HyperTieState> expected{make_state(2, 1, {{1, 1}, {2, 0}}), make_state(2, 1, {{1, 0}, {2, 1}}),
                                      make_state(2, 1, {{1, 0}, {2, 0}, {0, 1}})};
  for (const auto& e : expected) EXPECT_NE(std::find(s21.begin(), s21.end(), e), s21.end());
  const auto s10 = enumerate_structures(1, 0);
  ASSERT_EQ(s10.size(), 1u);
  EXPECT_EQ(s10[0], make_state(1, 0, {{1, 0}}));
  EXPECT_EQ(enumerate_structures(3, 2).size(), 13u);
  EXPECT_THROW(enumerate_structures(0, 0), std::invalid_argument);
  EXPECT_THROW(enumerate_structures(12, 12), std::length_error);
}

TEST(HyperTies, CountsMatchFormulaAndBruteForce) {
  for (int k = 0; k <= 4; ++k)
    for (int c = 0; c <= 4; ++c) {
      if (k + c == 0) continue;
      const auto all = enumerate_structures(k, c);
      EXPECT_EQ(static_cast<double>(all.size()), count_structures(k, c));
      EXPECT_EQ(static_cast<int>(all.size()), brute_force_count(k, c));
      std::set<std::vector<std::pair<int, int>>> distinct;
      for (const auto& p : all) {
        EXPECT_FALSE(validate(p).has_value());
        distinct.insert(p.pairs);
      }
      EXPECT_EQ(distinct.size(), all.size());
    }
}

TEST(HyperTies, EveryValidStructureIsEnumerated) {
  // All subsets of candidate pairs for (2, 2) that validate must be enumerated.
  std::vector<std::pair<int, int>> cand;
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; j <= 2; ++j)
      if (i || j) cand.emplace_back(i, j);
  const auto all = enumerate_structures(2, 2);
  int valid = 0;
  for (int mask = 0; mask < (1 << cand.size()); ++mask) {
    HyperTieState p;
    p.k = p.c = 2;
    for (std::size_t b = 0; b < cand.size(); ++b)
      if (mask >> b & 1) p.pairs.push_back(cand[b]);
    p.canonicalize();
    if (!validate(p)) {
      ++valid;
      EXPECT_NE(std::find(all.begin(), all.end(), p), all.end());
    }
  }
  EXPECT_EQ(valid, static_cast<int>(all.size()));
}

TEST(HyperTies, LabelRoundTrip) {
  LabelArrays l{{5, 5, 9, 2, 9}, {9, 7, 7, 3}};
  const auto s = labels_to_structure(l);
  EXPECT_EQ(s.state.k, 3);
  EXPECT_EQ(s.state.c, 3);
  EXPECT_EQ(s.state.num_hyper_ties(), 1);
  EXPECT_FALSE(validate(s.state).has_value());
  const auto back = structure_to_labels(s);
  // Same partition: two observations share a label iff they did before.
  std::vector<int> a = l.c_x, b = back.c_x;
  a.insert(a.end(), l.c_y.begin(), l.c_y.end());
  b.insert(b.end(), back.c_y.begin(), back.c_y.end());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a[i] == a[j], b[i] == b[j]);
  auto c = l;
  c.compact();
  EXPECT_EQ(c.c_x, (std::vector<int>{0, 0, 1, 2, 1}));
  EXPECT_EQ(c.c_y, (std::vector<int>{1, 3, 3, 4}));
}

TEST(HyperTies, MassVanishesOffDiagonalForDegenerateBase) {
  LevySpec spec;
  auto p = make_state(1, 1, {{1, 1}});
  p.n = {1};
  p.m = {1};
  const auto g0 = diagonal_degenerate(0, 1);
  EXPECT_EQ(structure_mass(p, spec, g0, {Eigen::VectorXd::Constant(1, 0.3)}, {Eigen::VectorXd::Constant(1, -1.0)}), 0.0);
}

TEST(HyperTies, MassesNormalize) {
  LevySpec spec;
  const auto g0 = bivariate_gaussian(0, 1, 0.0);
  std::vector<Eigen::VectorXd> xs{Eigen::VectorXd::Constant(1, 0.2), Eigen::VectorXd::Constant(1, -0.5)};
  std::vector<Eigen::VectorXd> ys{Eigen::VectorXd::Constant(1, 1.1)};
  double total = 0;
  std::vector<double> w;
  for (auto p : enumerate_structures(2, 1)) {
    p.n = {1, 2};
    p.m = {1};
    w.push_back(structure_mass(p, spec, g0, xs, ys));
    total += w.back();
  }
  double s = 0;
  for (double v : w) {
    EXPECT_GT(v, 0);
    s += v / total;
  }
  EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(HyperTies, PairMassesFollowFirstPairLaw) {
  // With one observation per sample the two structures must have masses in the
  // ratio gamma g0(x, y) : (1 - gamma) p0(x) p0(y).
  for (auto f : {LevyFamily::GammaEqualJumps, LevyFamily::InvGaussEqualJumps, LevyFamily::AdditiveGamma}) {
    for (double theta : {0.7, 2.0}) {
      LevySpec spec{f, theta, 0.4};
      const auto g0 = bivariate_gaussian(0.0, 1.0, 0.6);
      const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.4), y = Eigen::VectorXd::Constant(1, -0.3);
      auto tied = make_state(1, 1, {{1, 1}});
      auto apart = make_state(1, 1, {{1, 0}, {0, 1}});
      tied.n = apart.n = {1};
      tied.m = apart.m = {1};
      QuadratureConfig cfg;
      cfg.rel_tol = 1e-10;
      const double ratio = structure_mass(tied, spec, g0, {x}, {y}, cfg) / structure_mass(apart, spec, g0, {x}, {y}, cfg);
      const double gm = gamma_closed(spec);
      const double oracle = gm * g0_density(g0, {x, y}) / ((1 - gm) * p0_density(g0, 0, x) * p0_density(g0, 1, y));
      EXPECT_NEAR(ratio / oracle, 1.0, 1e-6) << to_string(f) << " " << theta;
    }
  }
}

TEST(HyperTies, DegenerateEqualValuesHyperTieProbability) {
  // Equal observed values under the diagonal base: relative to Lebesgue on the
  // support, the hyper-tie carries mass gamma p0(x) and the untied structure
  // (1 - gamma) p0(x)^2; the ratio is compared after dividing out p0(y).
  LevySpec spec{LevyFamily::GammaEqualJumps, 1.0, 0.0};
  const auto g0 = diagonal_degenerate(0, 1);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.8);
  auto tied = make_state(1, 1, {{1, 1}});
  auto apart = make_state(1, 1, {{1, 0}, {0, 1}});
  tied.n = apart.n = {1};
  tied.m = apart.m = {1};
  const double r = structure_mass(tied, spec, g0, {x}, {x}) / (structure_mass(apart, spec, g0, {x}, {x}) / normal_pdf(0.8));
  EXPECT_NEAR(r, 0.5 / 0.5, 1e-7);
}
