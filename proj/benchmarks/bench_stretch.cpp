#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "msr/stretch.hpp"
#include "msr/tempo.hpp"

namespace {

msr::AudioClip test_clip(double seconds, int sample_rate) {
  const auto n = static_cast<std::size_t>(seconds * sample_rate);
  std::mt19937 rng(1);
  std::normal_distribution<float> noise(0.0f, 0.05f);
  std::vector<float> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = 0.4f * static_cast<float>(std::sin(2.0 * std::numbers::pi * 440.0 * static_cast<double>(i) / sample_rate)) +
           noise(rng);
  }
  return msr::AudioClip::mono(std::move(s), sample_rate);
}

void BM_Stretch10s(benchmark::State& state) {
  const auto clip = test_clip(10.0, 44100);
  const msr::StretchRate rate = msr::StretchRate::from_grid_steps(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(msr::stretch(clip, rate));
  state.SetLabel("rate " + std::to_string(rate.value()));
}
BENCHMARK(BM_Stretch10s)->Arg(25)->Arg(40)->Arg(60)->Arg(99)->Unit(benchmark::kMillisecond);

void BM_VariantGrid10s(benchmark::State& state) {
  const auto clip = test_clip(10.0, 22050);
  for (auto _ : state) benchmark::DoNotOptimize(msr::generate_variant_grid(clip, {}, 0));
}
BENCHMARK(BM_VariantGrid10s)->Unit(benchmark::kSecond)->Iterations(1);

void BM_EstimateTempo30s(benchmark::State& state) {
  const auto clip = test_clip(30.0, 44100);
  for (auto _ : state) benchmark::DoNotOptimize(msr::estimate_tempo(clip));
}
BENCHMARK(BM_EstimateTempo30s)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
