#include <benchmark/benchmark.h>

#include "emokd/distill.hpp"
#include "emokd/gate.hpp"
#include "emokd/label_space.hpp"
#include "emokd/rng.hpp"

namespace {

using namespace emokd;

std::vector<double> random_vector(std::size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-4.0, 4.0);
  return v;
}

void BM_SoftenedSoftmax(benchmark::State& state) {
  const auto logits = random_vector(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) {
    auto p = softmax_raw(logits, 2.0);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_SoftenedSoftmax)->Arg(8)->Arg(64)->Arg(512);

void BM_KdLoss(benchmark::State& state) {
  const std::size_t C = static_cast<std::size_t>(state.range(0));
  const auto student = random_vector(C, 11);
  const auto teacher = random_vector(C, 13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kd_loss(student, teacher, 2.0));
  }
}
BENCHMARK(BM_KdLoss)->Arg(8)->Arg(64);

void BM_HeadForward(benchmark::State& state) {
  DistillHeadConfig config;
  config.input_dim = static_cast<std::size_t>(state.range(0));
  config.hidden_dims = {1024};
  config.num_classes = 8;
  const DistillHead head = DistillHead::initialized(config, 3);
  const auto features = random_vector(config.input_dim, 17);
  for (auto _ : state) {
    auto logits = head_forward_raw(head, features);
    benchmark::DoNotOptimize(logits);
  }
}
BENCHMARK(BM_HeadForward)->Arg(256)->Arg(3584);

void BM_LossGradients(benchmark::State& state) {
  DistillHeadConfig config;
  config.input_dim = static_cast<std::size_t>(state.range(0));
  config.hidden_dims = {64};
  config.num_classes = 8;
  const DistillHead head = DistillHead::initialized(config, 3);
  const auto features = random_vector(config.input_dim, 17);
  const auto teacher = random_vector(8, 19);
  std::vector<double> grad(head.params.size());
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0);
    auto loss = accumulate_loss_gradients(head, features, teacher, 3, 0.5, 2.0,
                                          grad);
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(BM_LossGradients)->Arg(32)->Arg(512);

void BM_GateForward(benchmark::State& state) {
  const auto variant = static_cast<GateVariant>(state.range(0));
  GateConfig config;
  config.variant = variant;
  config.num_classes = 8;
  const GateParams params = GateParams::initialized(config, 5);
  const auto v1 = one_hot("awe", mikels8()).materialize();
  auto v2 = softmax_raw(random_vector(8, 23), 1.0);
  for (auto _ : state) {
    auto y = gate_forward_raw(params, v1, v2);
    benchmark::DoNotOptimize(y);
  }
}
BENCHMARK(BM_GateForward)
    ->DenseRange(0, 4)
    ->ArgNames({"variant"});

}  // namespace

BENCHMARK_MAIN();
