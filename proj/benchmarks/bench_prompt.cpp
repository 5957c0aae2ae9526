#include <benchmark/benchmark.h>

#include <string>

#include "ccoach/prompt.hpp"

namespace {

std::string long_source(int lines) {
  std::string s = "#include <stdio.h>\n\n";
  for (int i = 0; i < lines; ++i) {
    s += "int helper_" + std::to_string(i) + "(int x) { return x * " + std::to_string(i) + " + 1; }\n";
  }
  return s;
}

void BM_TruncateToBudget(benchmark::State& state) {
  std::string source = long_source(static_cast<int>(state.range(0)));
  int error_line = static_cast<int>(state.range(0)) / 2;
  for (auto _ : state) benchmark::DoNotOptimize(ccoach::truncate_to_budget(source, error_line, 1024));
}
BENCHMARK(BM_TruncateToBudget)->Arg(100)->Arg(5000);

void BM_EstimateTokens(benchmark::State& state) {
  std::string source = long_source(2000);
  for (auto _ : state) benchmark::DoNotOptimize(ccoach::estimate_tokens(source));
}
BENCHMARK(BM_EstimateTokens);

}  // namespace
