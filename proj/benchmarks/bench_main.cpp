#include <benchmark/benchmark.h>

#include "balance/classifier.hpp"
#include "balance/graph.hpp"
#include "balance/metrics.hpp"
#include "balance/mlp.hpp"
#include "balance/regularizer.hpp"
#include "balance/theory.hpp"
#include "balance/trainer.hpp"

using namespace balance;

namespace {

Tensor noise(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor t(rows, cols);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

void BM_MlpForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Mlp net(MlpSpec{{8, 32, 32, 2}, Activation::Tanh}, rng);
  const Tensor z = noise(rng, batch, 8);
  for (auto _ : state) {
    Graph g;
    const auto b = net.bind(g, g.constant(z), true);
    g.backward(g.mean(g.mul(b.output, b.output)));
    benchmark::DoNotOptimize(g.grad(b.params[0]).data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_MlpForwardBackward)->Arg(64)->Arg(256);

void BM_RegularizerThroughClassifier(benchmark::State& state) {
  Rng rng(2);
  Mlp clf(MlpSpec{{2, 32, 8}}, rng);
  clf.freeze();
  const Tensor x = noise(rng, 64, 2);
  const auto dist = ClassDistribution::uniform(8);
  for (auto _ : state) {
    Graph g;
    const NodeId in = g.parameter(x);
    g.backward(l_reg(g, mean_softmax(g, clf, in), dist));
    benchmark::DoNotOptimize(g.grad(in).data().data());
  }
}
BENCHMARK(BM_RegularizerThroughClassifier);

void BM_SolveLambda(benchmark::State& state) {
  Rng rng(3);
  const auto n = theory::sample_simplex(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(theory::solve_lambda(n).lambda);
}
BENCHMARK(BM_SolveLambda)->Arg(8)->Arg(50)->Arg(1000);

void BM_BruteForceMinimizer(benchmark::State& state) {
  Rng rng(4);
  const auto n = theory::sample_simplex(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(theory::minimize_bruteforce(n).objective);
}
BENCHMARK(BM_BruteForceMinimizer)->Arg(10)->Arg(50);

void BM_Frechet(benchmark::State& state) {
  Rng rng(5);
  const Tensor a = noise(rng, 2000, 2), b = noise(rng, 2000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(frechet_gaussian(a, b).distance);
}
BENCHMARK(BM_Frechet);

// One training cycle (200 iterations) on the default long-tailed mixture.
void BM_TrainCycle(benchmark::State& state) {
  LongTailSpec spec;
  const auto data = make_longtail(spec);
  ClassifierOptions co;
  co.epochs = 3;
  const auto clf = pretrain_classifier(data, make_balanced_test(spec, 20), co);
  TrainerConfig cfg;
  cfg.iterations = 200;
  cfg.eval_samples = 100;
  for (auto _ : state) benchmark::DoNotOptimize(train(cfg, data, clf.net).history.size());
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_TrainCycle)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
