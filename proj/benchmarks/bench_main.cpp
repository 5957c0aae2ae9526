#include <benchmark/benchmark.h>

// libbenchmark_main ships LTO bytecode from another compiler release.
BENCHMARK_MAIN();
