#include <benchmark/benchmark.h>

#include "fiberpinn/launch.hpp"
#include "fiberpinn/losses.hpp"
#include "fiberpinn/orchestrator.hpp"

using namespace fiberpinn;

namespace {

// A desk-scale pulse problem: one loss-and-gradient pass is the training hot loop.
struct Problem {
  TrainingConfig config;
  TaskSetup setup;
  CollocationSet colloc;
  MlpModel model;

  explicit Problem(std::size_t n_p) {
    config.launch = make_pulse(PulseShape::Gaussian, 50e-12, 1e-3);
    config.l_max = 100e3;
    config.t_max = 400e-12;
    config.n_p = n_p;
    setup = make_setup(config);
    colloc = sample_collocation(config, setup, 1);
    model = init_mlp(config.widths, 1);
  }
};

const Problem& problem(std::size_t n_p) {
  static Problem small(1000), large(10000);
  return n_p == 1000 ? small : large;
}

void BM_GradientSerialReference(benchmark::State& state) {
  const Problem& p = problem(static_cast<std::size_t>(state.range(0)));
  const TaskLoss loss(p.colloc, p.setup.spec);
  const auto points = p.colloc.all_points();
  for (auto _ : state) benchmark::DoNotOptimize(reference::param_gradient(p.model, points, loss));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points.size()));
}

void BM_GradientKernel(benchmark::State& state) {
  const Problem& p = problem(static_cast<std::size_t>(state.range(0)));
  const TaskLoss loss(p.colloc, p.setup.spec);
  const auto points = p.colloc.all_points();
  const KernelOptions opts{static_cast<int>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(param_gradient(p.model, points, loss, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points.size()));
}

void BM_ForwardJets(benchmark::State& state) {
  const Problem& p = problem(static_cast<std::size_t>(state.range(0)));
  const auto points = p.colloc.all_points();
  for (auto _ : state) benchmark::DoNotOptimize(jet_forward(p.model, points));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points.size()));
}

}  // namespace

BENCHMARK(BM_GradientSerialReference)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientKernel)->Args({1000, 1})->Args({10000, 1})->Args({10000, 0})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardJets)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
