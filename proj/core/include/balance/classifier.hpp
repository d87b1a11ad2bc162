#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "balance/longtail.hpp"
#include "balance/mlp.hpp"

namespace balance {

struct ClassifierOptions {
  std::vector<std::size_t> hidden{32};
  Activation activation = Activation::LeakyRelu;
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double lr = 1e-2;
  std::uint64_t seed = 0;
};

struct ClassifierAccuracy {
  double overall = 0.0;
  std::vector<double> per_class;  // NaN-free: classes without test samples report 0
  /// Accuracy on the least populated training class.
  double tail = 0.0;
  int tail_class = 0;
};

struct TrainedClassifier {
  Mlp net;  // frozen; outputs logits, softmax is applied by callers
  ClassifierAccuracy accuracy;
  std::vector<int> absent_classes;
  /// Tail accuracy is zero; the regularizer receives no usable signal for
  /// that class and training with it is expected to diverge.
  bool divergence_warning = false;
};

/// Cross-entropy training of a K-way MLP classifier, then freezing it.
/// `test` must be balanced; accuracy is reported on it. The tail class is the
/// least populated class of `train`.
TrainedClassifier pretrain_classifier(const LabeledDataset& train, const LabeledDataset& test,
                                      const ClassifierOptions& opts);

/// Overall and per-class accuracy of `net` on `data`. `tail_class` selects
/// which per-class entry is copied into `tail`.
ClassifierAccuracy evaluate_classifier(const Mlp& net, const LabeledDataset& data, int tail_class);

/// Index of the least populated class (lowest index on ties).
int least_populated_class(const std::vector<std::size_t>& counts);

}  // namespace balance
