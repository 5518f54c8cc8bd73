#include <benchmark/benchmark.h>

#include "sgopt/engine.hpp"

namespace {

using namespace sgopt;

void BM_MixingStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Topology topo = make_complete_graph(n);
  const ProtocolSchedule schedule{0.3, 0.5, 0.5, 0.25};
  auto streams = make_streams(1, n, StreamPurpose::activation);
  const ActivationRound round = sample_activation(topo, schedule, 0, streams);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, n);
  Eigen::MatrixXd out;
  for (auto _ : state) {
    mixing_step_into(round.active_edges, round.link_weight(), x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["edges"] = static_cast<double>(round.active_edges.size());
}
BENCHMARK(BM_MixingStep)->Arg(10)->Arg(50)->Arg(200);

void BM_SampleActivation(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Topology topo = make_complete_graph(n);
  const ProtocolSchedule schedule{0.3, 0.5, 0.5, 0.25};
  auto streams = make_streams(1, n, StreamPurpose::activation);
  std::int64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_activation(topo, schedule, k++, streams));
}
BENCHMARK(BM_SampleActivation)->Arg(10)->Arg(50);

void BM_ZerothOrderEstimate(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const Problem problem = make_quadratic_problem(1, d, 1.0, 10.0, 1);
  const DirectionSampler sampler(DirectionKind::gaussian, d);
  const NoiseModel noise{0.0, 0.5, 0.0, 0.0};
  RandomStream direction(1, 0, StreamPurpose::direction);
  RandomStream eta(1, 0, StreamPurpose::szo_noise);
  OracleCounters counters;
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(d);
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_gradient_zo(problem, 0, x, 0.01, sampler, noise, {direction, eta}, counters));
}
BENCHMARK(BM_ZerothOrderEstimate)->Arg(5)->Arg(10)->Arg(50);

void BM_SimulatorStep(benchmark::State& state) {
  const auto method = static_cast<Method>(state.range(0));
  RunConfig config;
  config.method = method;
  config.topology = std::make_shared<Topology>(make_complete_graph(10));
  config.problem = std::make_shared<Problem>(make_quadratic_problem(10, 5, 1.0, 10.0, 1));
  config.protocol = {1.0 / std::sqrt(10.0), 1.0, 0.5, 0.25};
  config.steps.alpha0 = uses_zeroth_order(method) ? 1.05 : 2.1;
  config.steps.offset = stable_step_offset(method, *config.problem, config.steps.alpha0, DirectionKind::gaussian);
  config.smoothing = SmoothingSchedule::standard(DirectionSampler(DirectionKind::gaussian, 5));
  config.noise = {0.0, 0.5, 0.0, 0.5};
  Simulator sim(config);
  for (auto _ : state) sim.step();
  state.SetLabel(to_string(method));
}
BENCHMARK(BM_SimulatorStep)->DenseRange(0, 3);

}  // namespace

BENCHMARK_MAIN();
