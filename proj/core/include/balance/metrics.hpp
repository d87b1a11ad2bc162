#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "balance/classifier.hpp"
#include "balance/longtail.hpp"
#include "balance/mlp.hpp"
#include "balance/rng.hpp"
#include "balance/tensor.hpp"

namespace balance {

struct MetricsRecord {
  double kl_uniform = 0.0;
  double frechet = 0.0;
  double clf_accuracy = 0.0;
  std::vector<double> class_fractions;
};

/// KL(q || uniform) in nats for the empirical label distribution q, with
/// 0 log 0 = 0. Throws on an empty label set.
double kl_to_uniform(std::span<const int> labels, std::size_t num_classes);
double kl_to_uniform_counts(std::span<const double> counts);

std::vector<double> label_fractions(std::span<const int> labels, std::size_t num_classes);

struct FrechetResult {
  double distance = 0.0;
  /// 1e-10 * I was added to both covariances because one was singular.
  bool jittered = false;
};

/// 2-Wasserstein distance between Gaussian fits of two point sets (rows are
/// points). Each set needs at least dim + 1 rows.
FrechetResult frechet_gaussian(const Tensor& real, const Tensor& generated);

/// Same distance from explicit moments; covariances are dim x dim row-major.
FrechetResult frechet_from_moments(std::span<const double> mean_a, std::span<const double> cov_a,
                                   std::span<const double> mean_b, std::span<const double> cov_b);

/// Draws n samples in data space.
using Sampler = std::function<Tensor(std::size_t n, Rng& rng)>;

/// G(z) with z ~ N(0, I).
Sampler generator_sampler(const Mlp& generator);
/// Uniform resampling (with replacement) of a dataset.
Sampler resampling_sampler(const LabeledDataset& data);

struct CasResult {
  double accuracy = 0.0;
  std::vector<int> missing_classes;
};

/// Classification accuracy score: label `samples` generated points with the
/// labeler's argmax, train a fresh classifier on them and measure accuracy on
/// the balanced real test set.
CasResult classifier_accuracy_score(const Sampler& generator, const Mlp& labeler, const LabeledDataset& real_test,
                                    std::size_t samples, const ClassifierOptions& budget);

}  // namespace balance
