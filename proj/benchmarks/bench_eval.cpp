#include <benchmark/benchmark.h>

#include <random>

#include "ccoach/eval.hpp"

namespace {

std::vector<ccoach::RubricRecord> records(int reviewers, int items) {
  std::mt19937_64 rng(1);
  std::vector<ccoach::RubricRecord> out;
  for (int r = 0; r < reviewers; ++r) {
    for (int i = 0; i < items; ++i) {
      ccoach::RubricRecord rec;
      rec.pair_id = "p" + std::to_string(i);
      rec.reviewer_id = "r" + std::to_string(r);
      rec.conceptual_accuracy = rng() % 10 < 8;
      out.push_back(rec);
    }
  }
  return out;
}

void BM_LightsKappa(benchmark::State& state) {
  auto data = records(4, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ccoach::lights_kappa(data, ccoach::Category::ConceptualAccuracy));
  }
}
BENCHMARK(BM_LightsKappa)->Arg(100)->Arg(1000);

void BM_FrequencyTable(benchmark::State& state) {
  auto data = records(4, 400);
  for (auto _ : state) benchmark::DoNotOptimize(ccoach::frequency_table(data));
}
BENCHMARK(BM_FrequencyTable);

}  // namespace
