#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "balance/tensor.hpp"

namespace balance {

/// Long-tailed Gaussian mixture description.
///
/// Class k has n_k = round_half_up(n_max * rho^(-k/(K-1))) samples, clamped
/// at one, drawn from an isotropic Gaussian around its mean. When `means` is
/// empty the K means are spaced evenly on a circle of `radius` in the first
/// two coordinates.
struct LongTailSpec {
  std::size_t num_classes = 8;
  double rho = 100.0;
  std::size_t n_max = 1000;
  std::size_t dim = 2;
  double radius = 4.0;
  double stddev = 0.5;
  std::vector<std::vector<double>> means;
  std::uint64_t seed = 0;
};

struct LabeledDataset {
  Tensor samples;  // n x dim
  std::vector<int> labels;
  std::vector<std::size_t> counts;

  std::size_t size() const { return labels.size(); }
  std::size_t num_classes() const { return counts.size(); }
  std::size_t dim() const { return samples.cols(); }
};

void validate(const LongTailSpec& spec);

/// Per-class sample counts of the exponential profile.
std::vector<std::size_t> longtail_counts(const LongTailSpec& spec);

/// Component means, either explicit or on the default circle.
std::vector<std::vector<double>> component_means(const LongTailSpec& spec);

LabeledDataset make_longtail(const LongTailSpec& spec);

/// Balanced set with `per_class` samples per class, drawn from a stream
/// disjoint from the training stream of the same seed.
LabeledDataset make_balanced_test(const LongTailSpec& spec, std::size_t per_class);

/// Copy of `data` without any sample of class `k` (counts[k] becomes 0).
LabeledDataset drop_class(const LabeledDataset& data, int k);

/// CSV with header x0,...,x{dim-1},label.
void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data);
LabeledDataset read_dataset_csv(const std::filesystem::path& path, std::size_t num_classes);

/// key=value sidecar: K, rho, n_max, dim, seed, counts.
void write_dataset_metadata(const std::filesystem::path& path, const LongTailSpec& spec,
                            const LabeledDataset& data);

}  // namespace balance
