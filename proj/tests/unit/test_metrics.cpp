#include <gtest/gtest.h>

#include <cmath>

#include "balance/classifier.hpp"
#include "balance/metrics.hpp"
#include "gradcheck.hpp"

using namespace balance;

TEST(KlUniform, References) {
  std::vector<int> equal;
  for (int k = 0; k < 4; ++k) equal.insert(equal.end(), 25, k);
  EXPECT_NEAR(kl_to_uniform(equal, 4), 0.0, 1e-15);
  const std::vector<int> one(10, 2);
  EXPECT_NEAR(kl_to_uniform(one, 4), std::log(4.0), 1e-15);
  const std::vector<int> three_one{0, 0, 0, 1};
  EXPECT_NEAR(kl_to_uniform(three_one, 2), 0.13081203594113697, 1e-12);
  EXPECT_THROW(kl_to_uniform(std::vector<int>{}, 3), std::invalid_argument);
}

TEST(KlUniform, Properties) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.index(10);
    std::vector<double> counts(k);
    for (double& c : counts) c = static_cast<double>(rng.index(20));
    counts[rng.index(k)] += 1.0;
    const double kl = kl_to_uniform_counts(counts);
    EXPECT_GE(kl, -1e-15);
    EXPECT_LE(kl, std::log(static_cast<double>(k)) + 1e-12);
    // Permutation invariance.
    std::vector<double> rotated(counts.begin() + 1, counts.end());
    rotated.push_back(counts.front());
    EXPECT_NEAR(kl_to_uniform_counts(rotated), kl, 1e-12);
    bool all_equal = true;
    for (double c : counts) all_equal = all_equal && c == counts[0];
    EXPECT_EQ(kl < 1e-15, all_equal);
  }
}

TEST(LabelFractions, SumsToOne) {
  const std::vector<int> labels{0, 2, 2, 1};
  const auto f = label_fractions(labels, 3);
  EXPECT_DOUBLE_EQ(f[2], 0.5);
  EXPECT_DOUBLE_EQ(f[0] + f[1] + f[2], 1.0);
}

TEST(Frechet, IdenticalSetsAreZero) {
  Rng rng(2);
  const Tensor a = testkit::random_tensor(rng, 50, 3);
  EXPECT_NEAR(frechet_gaussian(a, a).distance, 0.0, 1e-8);
}

TEST(Frechet, OneDimensionalClosedForm) {
  const std::vector<double> m0{0.0}, v0{1.0}, m1{1.0}, v1{4.0};
  EXPECT_NEAR(frechet_from_moments(m0, v0, m1, v1).distance, 2.0, 1e-12);
}

TEST(Frechet, TranslationGivesSquaredOffset) {
  Rng rng(3);
  const Tensor a = testkit::random_tensor(rng, 40, 2);
  Tensor b = a;
  for (std::size_t i = 0; i < b.rows(); ++i) b(i, 0) += 3.0, b(i, 1) -= 4.0;
  EXPECT_NEAR(frechet_gaussian(a, b).distance, 25.0, 1e-8);
}

TEST(Frechet, SymmetricAndNonNegative) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng.index(4);
    const Tensor a = testkit::random_tensor(rng, 10 + rng.index(30), d, 0.5 + rng.uniform());
    const Tensor b = testkit::random_tensor(rng, 10 + rng.index(30), d, 0.5 + rng.uniform());
    const double ab = frechet_gaussian(a, b).distance;
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, frechet_gaussian(b, a).distance, 1e-9 * std::max(1.0, ab));
  }
}

TEST(Frechet, SampledGaussiansMatchClosedForm) {
  // N(0,1) vs N(1,4) from 20k draws each: distance 2 up to sampling error.
  Rng rng(5);
  Tensor a(20000, 1), b(20000, 1);
  for (std::size_t i = 0; i < 20000; ++i) a[i] = rng.normal(), b[i] = 1.0 + 2.0 * rng.normal();
  EXPECT_NEAR(frechet_gaussian(a, b).distance, 2.0, 0.1);
}

TEST(Frechet, SingularCovarianceIsJittered) {
  Tensor a(5, 2), b(5, 2);
  for (std::size_t i = 0; i < 5; ++i) a(i, 0) = a(i, 1) = static_cast<double>(i), b(i, 0) = static_cast<double>(i);
  const auto r = frechet_gaussian(a, b);
  EXPECT_TRUE(r.jittered);
  EXPECT_TRUE(std::isfinite(r.distance));
  EXPECT_THROW(frechet_gaussian(Tensor(2, 2), Tensor(5, 2)), std::invalid_argument);
}

TEST(Cas, ResamplerBeatsCollapsedGenerator) {
  LongTailSpec s;
  s.rho = 1;
  s.n_max = 200;
  const auto train = make_longtail(s);
  const auto test = make_balanced_test(s, 100);
  ClassifierOptions o;
  o.epochs = 10;
  o.seed = 3;
  const auto labeler = pretrain_classifier(train, test, o);

  const auto real = classifier_accuracy_score(resampling_sampler(train), labeler.net, test, 1600, o);
  const Sampler collapsed = [](std::size_t n, Rng&) {
    Tensor x(n, 2);
    for (std::size_t i = 0; i < n; ++i) x(i, 0) = 4.0;
    return x;
  };
  const auto point = classifier_accuracy_score(collapsed, labeler.net, test, 1600, o);
  EXPECT_NEAR(real.accuracy, labeler.accuracy.overall, 0.05);
  // One training class: the fresh classifier predicts it almost everywhere,
  // though directions it never saw are left to its initialization.
  EXPECT_LE(point.accuracy, 0.3);
  EXPECT_EQ(point.missing_classes.size(), 7u);
  EXPECT_GT(real.accuracy, point.accuracy);
}
