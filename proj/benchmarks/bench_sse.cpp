#include <benchmark/benchmark.h>

#include <string>

#include "ccoach/sse.hpp"

namespace {

void BM_SseParse(benchmark::State& state) {
  std::string stream;
  for (int i = 0; i < 500; ++i) {
    stream += ccoach::encode_sse_event(R"({"choices":[{"delta":{"content":"token )" + std::to_string(i) + R"("}}]})");
  }
  auto piece = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    std::size_t events = 0;
    ccoach::SseParser parser([&](std::string_view, std::string_view) { ++events; });
    for (std::size_t at = 0; at < stream.size(); at += piece) {
      parser.feed(std::string_view(stream).substr(at, piece));
    }
    benchmark::DoNotOptimize(events);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * stream.size()));
}
BENCHMARK(BM_SseParse)->Arg(1)->Arg(16)->Arg(4096);

}  // namespace
