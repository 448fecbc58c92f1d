// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "ksp/camera.hpp"
#include "ksp/forward_kinematics.hpp"
#include "ksp/spatial_maps.hpp"
#include "ksp/synth.hpp"
#include "ksp/video.hpp"

using namespace ksp;

namespace {

const KinematicTree& tree() {
  static const KinematicTree t = default_h36m_tree();
  return t;
}

Landmarks2D landmarks() {
  const auto sp = synth_pose(1, tree());
  return project(forward_kinematics(sp.params, tree()), sp.camera);
}

MapParams map_params(benchmark::State& state) {
  MapParams mp;
  mp.lattice = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0))};
  return mp;
}

Clip noisy_clip(int frames, int width, int height) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> byte(0, 255);
  Clip clip;
  clip.source_id = "bench";
  for (int t = 0; t < frames; ++t) {
    Frame f(width, height);
    for (auto& v : f.data) v = static_cast<std::uint8_t>(byte(rng));
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

template <bool Parallel>
void BM_Heatmaps(benchmark::State& state) {
  const auto lm = landmarks();
  const auto mp = map_params(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? render_heatmaps(lm, mp) : serial::render_heatmaps(lm, mp));
  }
}

template <bool Parallel>
void BM_Affinity(benchmark::State& state) {
  const auto lm = landmarks();
  const auto mp = map_params(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? render_affinity(lm, tree().limbs, mp)
                                      : serial::render_affinity(lm, tree().limbs, mp));
  }
}

template <bool Parallel>
void BM_MapsVjp(benchmark::State& state) {
  const auto lm = landmarks();
  const auto mp = map_params(state);
  const auto cot = render_maps(lm, tree(), mp);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? maps_vjp(lm, cot, tree(), mp) : serial::maps_vjp(lm, cot, tree(), mp));
  }
}

template <bool Parallel>
void BM_Median(benchmark::State& state) {
  const auto clip = noisy_clip(121, 160, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? median_background(clip, 60, 121) : serial::median_background(clip, 60, 121));
  }
}

template <bool Parallel>
void BM_TemporalStd(benchmark::State& state) {
  const auto clip = noisy_clip(125, 160, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? pixel_temporal_std(clip) : serial::pixel_temporal_std(clip));
  }
}

}  // namespace

BENCHMARK(BM_Heatmaps<false>)->Arg(56)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Heatmaps<true>)->Arg(56)->Arg(128)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_Affinity<false>)->Arg(56)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Affinity<true>)->Arg(56)->Arg(128)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_MapsVjp<false>)->Arg(56)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MapsVjp<true>)->Arg(56)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_Median<false>)->Arg(120)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Median<true>)->Arg(120)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TemporalStd<false>)->Arg(120)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TemporalStd<true>)->Arg(120)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
