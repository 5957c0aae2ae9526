#include <benchmark/benchmark.h>

#include <string>

#include "ccoach/telemetry.hpp"

namespace {

void BM_Anonymize(benchmark::State& state) {
  std::string source;
  for (int i = 0; i < 200; ++i) {
    source += "// Author: Priya Raman (z1234567) praman@student.example.edu\n";
    source += "int f" + std::to_string(i) + "(void) { return \"// not a comment\"[0] / 2; } /* by: praman */\n";
  }
  ccoach::AnonymizeOptions options;
  options.known_identifiers = {"Priya Raman", "Priya", "Raman", "praman"};
  for (auto _ : state) benchmark::DoNotOptimize(ccoach::anonymize(source, "z1234567_lab.c", options));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * source.size()));
}
BENCHMARK(BM_Anonymize);

}  // namespace
