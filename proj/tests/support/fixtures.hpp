#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ccoach/context.hpp"
#include "ccoach/eval.hpp"
#include "ccoach/process.hpp"
#include "ccoach/telemetry.hpp"

namespace fixtures {

namespace fs = std::filesystem;

fs::path source_dir();     // tests/
fs::path ccoach_binary();  // the built ccoach executable

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(std::string_view name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& file);
void write_file(const fs::path& file, std::string_view text);

// The uninitialized-array program, seven lines, printf on line 6.
std::string_view uninit_array_program();
ccoach::ErrorContext uninit_array_context();
fs::path uninit_array_golden_file();

// Straightforward pairwise Cohen's kappa from a dense confusion matrix in
// floating point, averaged over reviewer pairs. Shares no code with the
// implementation under test.
double oracle_cohen(const std::vector<std::string>& a, const std::vector<std::string>& b);
double oracle_lights_kappa(const std::vector<ccoach::RubricRecord>& records, ccoach::Category category);
std::vector<ccoach::RubricRecord> random_review_set(std::mt19937_64& rng);

// 200 compile-time and 200 run-time records, 180 and 150 conceptually accurate.
std::vector<ccoach::RubricRecord> rubric_reference_records();

struct WeeklySeries {
  std::int64_t term_start = 0;
  std::vector<std::int64_t> compile;
  std::vector<std::int64_t> runtime;
  std::vector<std::int64_t> users;
  std::int64_t total(std::size_t week_index) const { return compile[week_index] + runtime[week_index]; }
};
WeeklySeries usage_series();
std::vector<ccoach::UsageEvent> usage_events(const WeeklySeries& series);
// Half the help events at 22:00 UTC, half at 12:00 UTC.
std::vector<ccoach::UsageEvent> night_day_events(std::int64_t term_start, int per_half);

struct PlantedFile {
  std::string file_name;
  std::string text;
  std::vector<std::string> planted;  // every identifier that must disappear
};
struct PlantedCorpus {
  std::vector<PlantedFile> files;
  ccoach::AnonymizeOptions options;
};
PlantedCorpus planted_corpus(std::size_t count, std::uint64_t seed);
// Source with the body of every comment removed, markers kept.
std::string code_skeleton(std::string_view source);
// Concatenated comment bodies.
std::string comment_text(std::string_view source);

struct CorpusCase {
  std::string file;
  std::string phase;  // "compile" or "runtime"
  int line = 0;
  std::string rule;
  std::string tier;  // "baseline" or "valgrind"
};
std::vector<CorpusCase> load_manifest();

struct Detection {
  bool found = false;
  std::string phase;
  std::string file;
  int line = 0;
  std::string rule;
  std::string transcript;  // tool output, for failure messages
};
// Compiles the case with ccoach in `workdir`, runs the program when it
// builds, and reads back the stored error context.
Detection detect_corpus_case(const CorpusCase& c, const fs::path& workdir);

// Writes a config file for end-to-end runs and returns its path.
fs::path write_config(const fs::path& dir, const std::vector<std::string>& extra_lines = {});

ccoach::ProcessResult run_tool(const std::vector<std::string>& args, const fs::path& config_file,
                               const fs::path& cwd, std::optional<int> stdin_fd = std::nullopt);

}  // namespace fixtures
