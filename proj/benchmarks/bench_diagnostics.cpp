#include <benchmark/benchmark.h>

#include <string>

#include "ccoach/diagnostics.hpp"

namespace {

std::string compiler_output(int diagnostics) {
  std::string text;
  for (int i = 0; i < diagnostics; ++i) {
    std::string line = std::to_string(i + 1);
    text += "lab.c: In function 'main':\n";
    text += "lab.c:" + line + ":5: error: 'totl' undeclared (first use in this function)\n";
    text += "    " + line + " |     totl = 0;\n      |     ^~~~\n";
    text += "lab.c:" + line + ":5: note: each undeclared identifier is reported only once\n";
  }
  return text;
}

void BM_ParseDiagnostics(benchmark::State& state) {
  std::string text = compiler_output(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ccoach::parse_diagnostics(text));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseDiagnostics)->Arg(1)->Arg(20)->Arg(500);

}  // namespace
