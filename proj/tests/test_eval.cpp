#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "furbi/eval.hpp"
#include "furbi/random.hpp"

using namespace furbi;

namespace {
double npdf(double x, double m) { return std::exp(-0.5 * (x - m) * (x - m)) / std::sqrt(2.0 * std::numbers::pi); }
}  // namespace

TEST(Density, TrapezoidIntegratesNormal) {
  const auto x = linspace(-10, 10, 2001);
  std::vector<double> f;
  for (double v : x) f.push_back(npdf(v, 0));
  EXPECT_NEAR(trapezoid(x, f), 1.0, 1e-9);
}

TEST(Density, MiaeOfSeparatedNormalsIsTwo) {
  const auto x = linspace(-20, 30, 5001);
  std::vector<double> est;
  for (double v : x) est.push_back(npdf(v, 0));
  EXPECT_NEAR(miae(x, est, [](double v) { return npdf(v, 10); }), 2.0, 1e-5);
  EXPECT_NEAR(miae(x, est, est), 0.0, 1e-15);
}

TEST(Density, GridMeanAndQuantiles) {
  DensityGrid g({0.0, 1.0});
  for (int k = 1; k <= 101; ++k) g.add({double(k), 2.0 * k});
  EXPECT_EQ(g.iterations(), 101u);
  EXPECT_NEAR(g.mean()[0], 51.0, 1e-12);
  EXPECT_NEAR(g.quantile(0.5)[1], 102.0, 1e-9);
  EXPECT_THROW(g.add({1.0}), std::invalid_argument);
  EXPECT_THROW(DensityGrid({1.0, 1.0}), std::invalid_argument);
}

TEST(Cpo, HarmonicMeanOfTwoValues) {
  EXPECT_NEAR(std::exp(log_cpo({std::log(1.0), std::log(3.0)})), 1.5, 1e-12);
}

TEST(Cpo, ConstantTraceIsItsValue) {
  std::vector<double> t(500, std::log(0.37));
  EXPECT_NEAR(log_cpo(t), std::log(0.37), 1e-12);
  const auto r = cpo_report({{-1.0, -2.0, -3.0}, {-1.0, -2.0, -3.0}});
  EXPECT_NEAR(r.alcpo, -2.0, 1e-12);
  EXPECT_NEAR(r.mlcpo, -2.0, 1e-12);
}

TEST(Cpo, NonFiniteValuesAreExcluded) {
  EXPECT_TRUE(std::isnan(log_cpo({-1.0, -INFINITY})));
  const auto r = cpo_report({{-1.0, -INFINITY}, {-1.0, -2.0}});
  ASSERT_EQ(r.excluded.size(), 1u);
  EXPECT_EQ(r.excluded[0], 1);
  EXPECT_NEAR(r.alcpo, -1.0, 1e-12);
}

TEST(Partitions, RandIndexExamples) {
  EXPECT_NEAR(rand_index({1, 1, 2, 2}, {1, 2, 1, 2}), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(rand_index({0, 1, 2, 3}, {5, 5, 5, 5}), 0.0, 1e-15);
  EXPECT_NEAR(rand_index({0, 0, 1}, {7, 7, 3}), 1.0, 1e-15);
}

TEST(Partitions, RandIndexMatchesPairCount) {
  Rng rng(3);
  std::uniform_int_distribution<int> lab(0, 3);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> a(15), b(15);
    for (int i = 0; i < 15; ++i) a[i] = lab(rng), b[i] = lab(rng);
    int agree = 0, pairs = 0;
    for (int i = 0; i < 15; ++i)
      for (int j = i + 1; j < 15; ++j, ++pairs) agree += (a[i] == a[j]) == (b[i] == b[j]);
    EXPECT_NEAR(rand_index(a, b), double(agree) / pairs, 1e-12);
  }
}

TEST(Partitions, VariationOfInformation) {
  EXPECT_NEAR(variation_of_information({0, 0, 1, 1}, {4, 4, 9, 9}), 0.0, 1e-12);
  // one block vs all singletons: H = log n
  EXPECT_NEAR(variation_of_information({0, 0, 0, 0}, {0, 1, 2, 3}), std::log(4.0), 1e-12);
  EXPECT_NEAR(variation_of_information({0, 0, 1, 1}, {0, 1, 0, 1}), 2.0 * std::log(2.0), 1e-12);
}

TEST(Partitions, PointEstimatePicksRepeatedPartition) {
  const std::vector<std::vector<int>> s{{0, 0, 1, 1}, {0, 1, 2, 3}, {5, 5, 2, 2}};
  const auto p = vi_point_estimate(s);
  EXPECT_NEAR(variation_of_information(p, {0, 0, 1, 1}), 0.0, 1e-12);
  EXPECT_EQ(num_blocks(p), 2);
}

TEST(Mixing, IidTraceHasFullEss) {
  Rng rng(11);
  std::vector<double> x(10000);
  for (double& v : x) v = std_normal(rng);
  const auto e = ess(x);
  EXPECT_FALSE(e.degenerate);
  EXPECT_GT(e.ess / x.size(), 0.8);
  EXPECT_LT(e.ess / x.size(), 1.2);
}

TEST(Mixing, Ar1EssMatchesTheory) {
  Rng rng(12);
  const double phi = 0.9;
  std::vector<double> x(200000);
  double v = 0.0;
  for (double& t : x) t = v = phi * v + std::sqrt(1 - phi * phi) * std_normal(rng);
  const double ratio = ess(x).ess / x.size();
  const double theory = (1 - phi) / (1 + phi);
  EXPECT_NEAR(ratio, theory, 0.5 * theory);
}

TEST(Mixing, ConstantTraceIsFlagged) {
  EXPECT_TRUE(ess(std::vector<double>(100, 2.0)).degenerate);
  EXPECT_THROW(ess(std::vector<double>(5, 1.0)), std::invalid_argument);
}

TEST(Ks, SameAndShiftedSamples) {
  Rng rng(5);
  std::vector<double> a(4000), b(4000), c(4000);
  for (auto* v : {&a, &b}) for (double& t : *v) t = std_normal(rng);
  for (double& t : c) t = 0.3 + std_normal(rng);
  EXPECT_GT(ks_two_sample(a, b).p_value, 1e-3);
  EXPECT_LT(ks_two_sample(a, c).p_value, 1e-6);
}

TEST(Mixing, BatchMeansMatchesIidStderr) {
  Rng rng(8);
  std::vector<double> x(50000);
  for (double& t : x) t = std_normal(rng);
  EXPECT_NEAR(batch_means_stderr(x) * std::sqrt(50000.0), 1.0, 0.25);
}
