#include <benchmark/benchmark.h>

#include "ptychoforge/fft.hpp"
#include "ptychoforge/forward.hpp"
#include "ptychoforge/metrics.hpp"
#include "ptychoforge/objgen.hpp"
#include "ptychoforge/recon.hpp"
#include "ptychoforge/scan.hpp"

namespace pf = ptychoforge;

namespace {

pf::ComplexImage2D dead_leaves(std::size_t n, std::uint64_t seed) {
  return pf::objgen::generate_object(pf::objgen::ObjectClass::with_defaults(pf::objgen::ObjectKind::DeadLeaves), n, n,
                                     {seed, 0})
      .field;
}

pf::scan::ScanPlan raster(std::size_t object, std::size_t probe, double step) {
  pf::scan::ScanSpec s;
  s.extent_x = s.extent_y = static_cast<double>(object - probe);
  s.step_x = s.step_y = step;
  s.origin_x = s.origin_y = static_cast<double>(probe / 2);
  return pf::scan::make_scan(s, {});
}

}  // namespace

static void BM_Fft2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto img = dead_leaves(std::max<std::size_t>(n, 64), 1);
  const auto patch = pf::crop_image(img, 0, 0, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(pf::fft2_forward(patch));
}
BENCHMARK(BM_Fft2)->Arg(64)->Arg(128)->Arg(256);

static void BM_FftWorkspace(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  pf::FftWorkspace ws(n, n);
  for (std::size_t i = 0; i < ws.size(); ++i) ws.data()[i] = pf::Complex(static_cast<double>(i % 7), 0.0);
  for (auto _ : state) {
    ws.forward();
    ws.backward();
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_FftWorkspace)->Arg(64)->Arg(128);

static void BM_SimulatePattern(benchmark::State& state) {
  const auto obj = dead_leaves(128, 2);
  const auto probe = pf::forward::make_synthetic_probe({});
  const auto patch = pf::forward::extract_patch(obj, {64.3, 63.8}, 64);
  for (auto _ : state) benchmark::DoNotOptimize(pf::forward::simulate_pattern(patch, probe));
}
BENCHMARK(BM_SimulatePattern);

static void BM_SimulateDataset(benchmark::State& state) {
  const auto obj = dead_leaves(300, 3);
  const auto probe = pf::forward::make_synthetic_probe({});
  const auto plan = raster(300, 64, 8.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pf::forward::simulate_dataset(obj, probe, plan, {1e4, 1e6, false}, {4, 0}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(plan.size()));
}
BENCHMARK(BM_SimulateDataset)->Unit(benchmark::kMillisecond);

static void BM_EpieSweep(benchmark::State& state) {
  const auto obj = dead_leaves(300, 5);
  const auto probe = pf::forward::make_synthetic_probe({64, 20.0});
  const auto plan = raster(300, 64, 8.0);
  const auto stack = pf::forward::simulate_dataset(obj, probe, plan, {1, 1, true}, {});
  pf::recon::ReconConfig config;
  config.iterations = 1;
  config.object_height = config.object_width = 300;
  for (auto _ : state) benchmark::DoNotOptimize(pf::recon::reconstruct(stack, probe, config));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(stack.size()));
}
BENCHMARK(BM_EpieSweep)->Unit(benchmark::kMillisecond);

static void BM_Grouping(benchmark::State& state) {
  pf::scan::ScanSpec s;
  s.extent_x = s.extent_y = 29 * 8.0;
  s.step_x = s.step_y = 8.0;
  s.jitter_sigma = 1.0;
  const auto plan = pf::scan::make_scan(s, {6, 0});
  const auto params = pf::scan::default_grouping(plan);
  for (auto _ : state) benchmark::DoNotOptimize(pf::scan::group_quadrants(plan, params, {7, 0}));
}
BENCHMARK(BM_Grouping)->Unit(benchmark::kMillisecond);

static void BM_FrcPipeline(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto truth = dead_leaves(n, 8);
  const auto est = pf::fourier_shift(truth, 1.25, -0.5);
  for (auto _ : state) benchmark::DoNotOptimize(pf::metrics::frc_auc_pipeline(truth, est));
}
BENCHMARK(BM_FrcPipeline)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_ObjectGeneration(benchmark::State& state) {
  const auto kind = static_cast<pf::objgen::ObjectKind>(state.range(0));
  const auto oc = pf::objgen::ObjectClass::with_defaults(kind);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pf::objgen::generate_object(oc, 256, 256, {seed++, 0}));
  state.SetLabel(std::string(pf::objgen::short_name(kind)));
}
BENCHMARK(BM_ObjectGeneration)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
