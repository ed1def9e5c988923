#include <random>

#include <benchmark/benchmark.h>

#include "mpseg/distance.hpp"
#include "mpseg/multiplanar.hpp"
#include "mpseg/phantom.hpp"
#include "mpseg/postprocess.hpp"

using namespace mpseg;

namespace {

Mask sparse_mask(std::int64_t n, double density) {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution bit(density);
  Mask m({n, n, n});
  for (auto& b : m.data) b = bit(rng);
  return m;
}

const Phantom& joint() {
  static const Phantom p = generate_phantom(joint_phantom_spec());
  return p;
}

}  // namespace

static void BM_SquaredEdt(benchmark::State& state) {
  const Mask m = sparse_mask(state.range(0), 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(squared_edt(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.size()));
}
BENCHMARK(BM_SquaredEdt)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_ClassDistances(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(class_distances(joint().labels));
}
BENCHMARK(BM_ClassDistances)->Unit(benchmark::kMillisecond);

static void BM_ConnectedComponents(benchmark::State& state) {
  const Mask m = sparse_mask(state.range(0), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(connected_components(m, Connectivity::corners));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.size()));
}
BENCHMARK(BM_ConnectedComponents)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_SymmetricFilter(benchmark::State& state) {
  const SymmetryPairs pairs = SymmetryPairs::parse("1:2,3:4");
  for (auto _ : state) benchmark::DoNotOptimize(symmetric_cc_filter(joint().labels, pairs));
}
BENCHMARK(BM_SymmetricFilter)->Unit(benchmark::kMillisecond);

static void BM_ExtractSlices(benchmark::State& state) {
  const auto& g = joint().image.geometry();
  const ViewGrid grid({0.48, 0.6, 0.64}, g.center_mm(), 64.0, 64);
  for (auto _ : state) benchmark::DoNotOptimize(extract_slices({&joint().image, &joint().labels, nullptr}, grid));
}
BENCHMARK(BM_ExtractSlices)->Unit(benchmark::kMillisecond);

static void BM_ReconstructView(benchmark::State& state) {
  const auto& g = joint().image.geometry();
  const ViewGrid grid({0.48, 0.6, 0.64}, g.center_mm(), 64.0, 64);
  SlicePrediction pred{64, 5, std::vector<float>(64 * 64 * 64 * 5, 0.2f)};
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_view(pred, grid, g));
}
BENCHMARK(BM_ReconstructView)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
