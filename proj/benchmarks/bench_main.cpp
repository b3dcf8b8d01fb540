#include <benchmark/benchmark.h>

#include <random>

#include "instmvs/cascade.hpp"
#include "instmvs/confidence.hpp"
#include "instmvs/costvolume.hpp"
#include "instmvs/fusion.hpp"
#include "instmvs/scene.hpp"

namespace {

using namespace instmvs;

struct Views {
  std::vector<RenderedView> rendered;
  CameraView ref;
  std::vector<CameraView> srcs;
};

const Views& shelf_views() {
  static const Views views = [] {
    SceneSpec spec = preset("shelf");
    spec.ring.width /= 2;
    spec.ring.height /= 2;
    spec.ring.focal /= 2;
    spec.ring.count = 3;
    Views v;
    v.rendered = render(spec);
    v.ref = {v.rendered[0].image, v.rendered[0].camera};
    for (size_t i = 1; i < v.rendered.size(); ++i) {
      v.srcs.push_back({v.rendered[i].image, v.rendered[i].camera});
    }
    return v;
  }();
  return views;
}

// Shared range per pixel: takes the plane-sweep path.
void BM_CostVolumeSweep(benchmark::State& state) {
  const Views& v = shelf_views();
  const int rows = v.ref.image.rows(), cols = v.ref.image.cols();
  const auto hyps = HypothesisSet::dense(rows, cols, static_cast<int>(state.range(0)),
                                         std::vector<Interval>(size_t(rows) * cols, {425.0, 935.0}));
  for (auto _ : state) benchmark::DoNotOptimize(build_cost_volume(v.ref, v.srcs, hyps, 7));
  state.SetItemsProcessed(state.iterations() * int64_t(hyps.slots()) * state.range(0));
}
BENCHMARK(BM_CostVolumeSweep)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

// Per-pixel ranges: takes the windowed path.
void BM_CostVolumeWindow(benchmark::State& state) {
  const Views& v = shelf_views();
  const int rows = v.ref.image.rows(), cols = v.ref.image.cols();
  std::vector<Interval> ranges;
  for (int i = 0; i < rows * cols; ++i) {
    const double lo = 500.0 + (i % 97);
    ranges.push_back({lo, lo + 120.0});
  }
  const auto hyps = HypothesisSet::dense(rows, cols, static_cast<int>(state.range(0)), ranges);
  for (auto _ : state) benchmark::DoNotOptimize(build_cost_volume(v.ref, v.srcs, hyps, 7));
  state.SetItemsProcessed(state.iterations() * int64_t(hyps.slots()) * state.range(0));
}
BENCHMARK(BM_CostVolumeWindow)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_IntervalMass(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(static_cast<size_t>(state.range(0)));
  for (double& x : p) x = u(rng);
  const double spacing = 510.0 / static_cast<double>(p.size() - 1);
  double a = 600.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(interval_mass(p, 425.0, spacing, {a, a + 120.0}));
    a = a > 800.0 ? 430.0 : a + 1.7;
  }
}
BENCHMARK(BM_IntervalMass)->Arg(16)->Arg(64);

void BM_NearestNeighbor(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-300.0, 300.0);
  std::vector<Vec3> points;
  for (int64_t i = 0; i < state.range(0); ++i) points.emplace_back(u(rng), u(rng), 700.0 + u(rng));
  const NearestNeighborIndex index(points, 20.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.distance(Vec3(u(rng), u(rng), 700.0 + u(rng)), 20.0));
  }
}
BENCHMARK(BM_NearestNeighbor)->Arg(10000)->Arg(400000);

void BM_NarrowRange(benchmark::State& state) {
  const int rows = 256, cols = 320;
  const RangeMap prev = RangeMap::uniform(rows, cols, {425.0, 935.0});
  DepthMap d(rows, cols);
  for (size_t i = 0; i < d.size(); ++i) {
    d.depth[i] = 430.0 + static_cast<double>(i % 500);
    d.valid[i] = 1;
  }
  for (auto _ : state) benchmark::DoNotOptimize(narrow_range(prev, d, 0.25, {425.0, 935.0}));
}
BENCHMARK(BM_NarrowRange);

}  // namespace

BENCHMARK_MAIN();
