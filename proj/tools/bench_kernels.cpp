// Serial reference vs OpenMP kernels on the MRI-sized problem, plus trial-level
// parallelism in the recovery experiment.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "msso/harness.hpp"

namespace {

using namespace msso;

const MssoProblem& mri_problem() {
  static const MssoProblem p = build_mri_scene().problem();
  return p;
}

void BM_BlockEnergies(benchmark::State& state) {
  const Exec exec = state.range(0) ? Exec::parallel : Exec::serial;
  const ColumnView view = column_view(mri_problem());
  const ProjectorBank bank(view);
  const DenseVector& r = mri_problem().observation();
  for (auto _ : state) benchmark::DoNotOptimize(block_energies(bank, r, {}, exec));
  state.SetLabel(exec == Exec::parallel ? "openmp" : "serial");
}
BENCHMARK(BM_BlockEnergies)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_LsmpScores(benchmark::State& state) {
  const Exec exec = state.range(0) ? Exec::parallel : Exec::serial;
  const ColumnView view = column_view(mri_problem());
  LsmpScorer scorer(view, mri_problem().observation());
  std::vector<char> chosen(static_cast<std::size_t>(view.N()), 0);
  for (const Index q : {Index{112}, Index{97}, Index{127}}) {
    chosen[static_cast<std::size_t>(q)] = 1;
    scorer.accept(q, exec);
  }
  for (auto _ : state) benchmark::DoNotOptimize(scorer.scores(chosen, exec));
  state.SetLabel(exec == Exec::parallel ? "openmp" : "serial");
}
BENCHMARK(BM_LsmpScores)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LsmpRun(benchmark::State& state) {
  GreedyOptions opts;
  opts.exec = state.range(0) ? Exec::parallel : Exec::serial;
  for (auto _ : state) benchmark::DoNotOptimize(run_lsmp(mri_problem(), 10, opts));
  state.SetLabel(opts.exec == Exec::parallel ? "openmp" : "serial");
}
BENCHMARK(BM_LsmpRun)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RecoveryTrials(benchmark::State& state) {
  ExperimentOptions opts;
  opts.algorithms = {Algorithm::mp, Algorithm::lsmp, Algorithm::irls};
  opts.trials = 16;
  opts.jobs = static_cast<int>(state.range(0));
  opts.lambda_grid = linspace(0.0, 2.0, 8);
  for (auto _ : state) benchmark::DoNotOptimize(run_recovery_experiment({{25, 30, 2, 3}}, opts));
  state.SetLabel("jobs=" + std::to_string(opts.jobs));
}
BENCHMARK(BM_RecoveryTrials)->Arg(1)->Arg(omp_get_max_threads())->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
