#include "balance/classifier.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "balance/optim.hpp"
#include "balance/rng.hpp"

namespace balance {

int least_populated_class(const std::vector<std::size_t>& counts) {
  return static_cast<int>(std::min_element(counts.begin(), counts.end()) - counts.begin());
}

ClassifierAccuracy evaluate_classifier(const Mlp& net, const LabeledDataset& data, int tail_class) {
  const std::size_t k = net.output_dim();
  ClassifierAccuracy acc;
  acc.per_class.assign(k, 0.0);
  acc.tail_class = tail_class;
  if (data.size() == 0) return acc;

  const auto predicted = argmax_rows(net.forward(data.samples));
  std::vector<std::size_t> hits(k, 0), seen(k, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto y = static_cast<std::size_t>(data.labels[i]);
    ++seen[y];
    if (predicted[i] == data.labels[i]) {
      ++hits[y];
      ++correct;
    }
  }
  acc.overall = static_cast<double>(correct) / static_cast<double>(data.size());
  for (std::size_t c = 0; c < k; ++c)
    acc.per_class[c] = seen[c] ? static_cast<double>(hits[c]) / static_cast<double>(seen[c]) : 0.0;
  acc.tail = acc.per_class.at(static_cast<std::size_t>(tail_class));
  return acc;
}

TrainedClassifier pretrain_classifier(const LabeledDataset& train, const LabeledDataset& test,
                                      const ClassifierOptions& opts) {
  if (train.size() == 0) throw std::invalid_argument("classifier training set is empty");
  const std::size_t k = train.num_classes();
  if (k < 2) throw std::invalid_argument("classifier needs at least two classes");

  MlpSpec spec;
  spec.sizes.push_back(train.dim());
  spec.sizes.insert(spec.sizes.end(), opts.hidden.begin(), opts.hidden.end());
  spec.sizes.push_back(k);
  spec.hidden = opts.activation;
  spec.output = Activation::Identity;

  Rng init(opts.seed, "classifier-init");
  TrainedClassifier out{Mlp(spec, init), {}, {}, false};
  Adam adam(AdamOptions{opts.lr, 0.9, 0.999, 1e-8});
  Rng shuffle(opts.seed, "classifier-shuffle");

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, std::min(opts.batch_size, train.size()));
  std::vector<Tensor> grads;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle.engine());
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      Tensor x(n, train.dim()), onehot(n, k);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[start + i];
        for (std::size_t d = 0; d < train.dim(); ++d) x(i, d) = train.samples(src, d);
        onehot(i, static_cast<std::size_t>(train.labels[src])) = 1.0;
      }
      Graph g;
      const auto bound = out.net.bind(g, g.constant(std::move(x)), true);
      const NodeId logp = g.log_softmax_rows(bound.output);
      const NodeId picked = g.mul(logp, g.constant(std::move(onehot)));
      const NodeId loss = g.scale(g.sum(picked), -1.0 / static_cast<double>(n));
      g.backward(loss);
      grads.clear();
      for (NodeId p : bound.params) grads.push_back(g.grad(p));
      adam.step(out.net.params(), grads);
    }
  }
  out.net.freeze();

  for (std::size_t c = 0; c < k; ++c)
    if (train.counts[c] == 0) out.absent_classes.push_back(static_cast<int>(c));
  out.accuracy = evaluate_classifier(out.net, test, least_populated_class(train.counts));
  out.divergence_warning = out.accuracy.tail == 0.0;
  return out;
}

}  // namespace balance
