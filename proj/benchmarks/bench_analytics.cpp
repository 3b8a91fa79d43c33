#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "msr/analytics.hpp"

namespace {

std::vector<msr::GenreStats> random_genres(std::size_t n) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> mean_min(0.5, 0.8), mean_max(1.2, 1.4), sd(0.02, 0.1);
  std::vector<msr::GenreStats> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"g" + std::to_string(i), 80, mean_min(rng), sd(rng), mean_max(rng), sd(rng)});
  }
  return out;
}

void BM_SimilarityMatrix(benchmark::State& state) {
  const auto genres = random_genres(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(msr::similarity_matrix(genres));
}
BENCHMARK(BM_SimilarityMatrix)->Arg(11)->Arg(100)->Arg(1000);

void BM_Anova(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.7, 0.07);
  std::vector<std::vector<double>> groups(11, std::vector<double>(static_cast<std::size_t>(state.range(0))));
  for (auto& g : groups) {
    for (auto& x : g) x = normal(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(msr::anova_one_way(groups));
}
BENCHMARK(BM_Anova)->Arg(81)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
