#include <benchmark/benchmark.h>

#include <random>

#include "peeriv/design.hpp"
#include "peeriv/history.hpp"
#include "peeriv/linalg.hpp"
#include "peeriv/pipeline.hpp"
#include "peeriv/simulator.hpp"

namespace {

using namespace peeriv;

SimOutput make_panel(std::size_t rows) {
  SimConfig c;
  c.seed = 99;
  c.n_matches = rows / 8;
  c.n_players = static_cast<std::size_t>(static_cast<double>(rows) / c.matches_per_player);
  return simulate(c);
}

void BM_BuildInstruments(benchmark::State& state) {
  const SimOutput sim = make_panel(static_cast<std::size_t>(state.range(0)));
  const DesignPanel design = build_exposure_design(sim.panel, {});
  for (auto _ : state) {
    const HistoryIndex index = HistoryIndex::build(sim.panel);
    benchmark::DoNotOptimize(build_instruments(sim.panel, index, design));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sim.panel.num_rows()));
}
BENCHMARK(BM_BuildInstruments)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_AccumulateGram(benchmark::State& state) {
  const auto rows = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(rows, 10);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  const std::vector<ColumnBlock> blocks{m};
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_gram(blocks));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_AccumulateGram)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
  const SimOutput sim = make_panel(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(sim.panel, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sim.panel.num_rows()));
}
BENCHMARK(BM_Pipeline)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
