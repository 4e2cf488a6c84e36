// Serial reference against the OpenMP path for the sampled kernels.

#include <benchmark/benchmark.h>

#include "obata/geodesic.hpp"
#include "obata/manifold.hpp"
#include "obata/tensor.hpp"

namespace {

using namespace obata;

MetricModel de_sitter() { return MetricModel::quadric(Signature{1, 2}, 1.0, 2, 1); }

void verify_kernel(benchmark::State& state, Execution exec) {
  const MetricModel m = de_sitter();
  const ScalarField f{restrict_linear(m, {0.0, 1.0, 0.0}), 1.0};
  VerifyOptions opt;
  opt.exec = exec;
  for (auto _ : state) {
    benchmark::DoNotOptimize(obata_verify(m, f, static_cast<std::size_t>(state.range(0)), 0, opt));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void probe_kernel(benchmark::State& state, Execution exec) {
  const MetricModel m = MetricModel::warped(1, parse("2 + sin(x0)", 1), MetricModel::flat(Signature{0, 2}));
  ProbeSpec spec;
  spec.count = static_cast<std::size_t>(state.range(0));
  spec.s_budget = 10.0;
  spec.exec = exec;
  for (auto _ : state) benchmark::DoNotOptimize(completeness_probe(m, spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_VerifySerial(benchmark::State& s) { verify_kernel(s, Execution::serial); }
void BM_VerifyParallel(benchmark::State& s) { verify_kernel(s, Execution::parallel); }
void BM_ProbeSerial(benchmark::State& s) { probe_kernel(s, Execution::serial); }
void BM_ProbeParallel(benchmark::State& s) { probe_kernel(s, Execution::parallel); }

}  // namespace

BENCHMARK(BM_VerifySerial)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VerifyParallel)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProbeSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProbeParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
