// Microbenchmarks for the hot paths: the squared discrepancy, the fairness
// gradient, score-set assembly, and one full federated round.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "fedfair/config.hpp"
#include "fedfair/experiment.hpp"
#include "fedfair/fairness.hpp"
#include "fedfair/federation.hpp"
#include "fedfair/kernel.hpp"
#include "fedfair/model.hpp"
#include "fedfair/rng.hpp"

namespace {

using namespace fedfair;

std::vector<double> random_scores(int n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> s(static_cast<std::size_t>(n));
  for (double& v : s) v = rng.uniform();
  return s;
}

KernelPtr kernel_for(int which) {
  switch (which) {
    case 0: return make_gaussian(1.0);
    case 1: return make_laplacian(1.0);
    default: return make_distance_induced();
  }
}

void BM_mmd_squared(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const KernelPtr kernel = kernel_for(static_cast<int>(state.range(1)));
  const std::vector<double> s0 = random_scores(n, 1);
  const std::vector<double> s1 = random_scores(n, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(mmd_squared(s0, s1, *kernel));
  state.SetComplexityN(n);
}
BENCHMARK(BM_mmd_squared)
    ->ArgsProduct({{50, 100, 200, 400, 800}, {0, 1, 2}})
    ->Complexity(benchmark::oNSquared);

void BM_fairness_gradient(benchmark::State& state) {
  const int rows_n = static_cast<int>(state.range(0));
  const int set_size = static_cast<int>(state.range(1));
  RunSpec spec;
  spec.synthetic = SyntheticSpec{1, rows_n, 10, 1.0};
  spec.test_fraction = 0.0;
  const Federation fed = build_federation(spec);
  const TabularDataset& data = fed.clients[0].train;

  Model model = Model::logistic(data.dim());
  RngStream rng = RngStream::derive(7, StreamId::init);
  model.init_params(rng);

  const FairnessSpec fairness = FairnessSpec::make(Criterion::statistical_parity);
  const KernelPtr kernel = make_gaussian(1.0);
  PredictionSets sets;
  sets.scores.push_back({random_scores(set_size, 3), random_scores(set_size, 4)});
  for (auto& group : sets.scores[0])
    std::sort(group.begin(), group.end());
  sets.active.assign(1, 1);
  const std::vector<std::array<double, 2>> alpha(1, {1.0, 1.0});

  std::vector<int> rows(static_cast<std::size_t>(data.size()));
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> grad(model.param_count());
  for (auto _ : state) {
    grad_fk(model, data, rows, fairness, alpha, sets, *kernel, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_fairness_gradient)->ArgsProduct({{100, 400}, {50, 100, 200}});

void BM_build_prediction_sets(benchmark::State& state) {
  RunSpec spec;
  spec.synthetic = SyntheticSpec{10, 200, 10, 1.0};
  const Federation fed = build_federation(spec);
  Model model = Model::logistic(fed.dim());
  RngStream rng = RngStream::derive(7, StreamId::init);
  model.init_params(rng);
  const FairnessSpec fairness = FairnessSpec::make(Criterion::statistical_parity);
  const AlphaWeights alpha = compute_alpha(fed, fairness);
  FedRunConfig cfg;
  cfg.set_size = static_cast<int>(state.range(0));
  int round = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_prediction_sets(fed, model, fairness, alpha, cfg, ++round));
  }
}
BENCHMARK(BM_build_prediction_sets)->Arg(50)->Arg(100)->Arg(200);

void BM_federated_round(benchmark::State& state) {
  RunSpec spec;
  spec.synthetic = SyntheticSpec{10, 200, 10, 1.0};
  spec.kernel = KernelKind::distance;
  spec.fed.rounds = 1;
  spec.fed.local_epochs = static_cast<int>(state.range(0));
  spec.fed.batch_size = 100;
  spec.fed.set_size = 100;
  spec.fed.lambda = 1.0;
  spec.fed.eval_every = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(execute_run(spec));
  }
}
BENCHMARK(BM_federated_round)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
