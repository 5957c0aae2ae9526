#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccoach/diagnostics.hpp"
#include "ccoach/runtime_report.hpp"

namespace ccoach {

enum class Phase { CompileTime, RunTime };

std::string_view to_string(Phase phase);

struct SourceFile {
  std::string path;
  std::string text;
  bool operator==(const SourceFile&) const = default;
};

/// Everything known about the most recent failure.
struct ErrorContext {
  Phase phase = Phase::CompileTime;
  std::int64_t timestamp = 0;  // UTC seconds
  std::vector<SourceFile> sources;
  std::vector<Diagnostic> diagnostics;
  std::optional<Diagnostic> primary_diagnostic;
  std::optional<std::string> enhanced_message;
  std::optional<RuntimeReport> runtime_report;
  std::optional<LocalsSnapshot> locals;
  std::string binary_hash;
  std::string error_file;
  std::optional<int> error_line;

  bool operator==(const ErrorContext&) const = default;

  const SourceFile* find_source(std::string_view path) const;
};

/// Throws InvariantViolation when the phase/field rules do not hold.
void validate(const ErrorContext& ctx);

/// Binary form: "CCOACHCTX\0", version 0x01, an 8-byte big-endian length then
/// UTF-8 JSON metadata, then one 8-byte big-endian length-prefixed section per
/// source file holding its raw bytes.
std::string serialize(const ErrorContext& ctx);
ErrorContext deserialize(std::string_view bytes);  // throws CorruptStore

using Clock = std::function<std::int64_t()>;
std::int64_t system_clock_seconds();

/// One context file per directory. Writes are atomic (temp file + rename);
/// the last writer wins.
class ContextStore {
 public:
  static constexpr std::string_view kFileName = "context.bin";

  explicit ContextStore(std::filesystem::path directory, Clock clock = system_clock_seconds,
                        std::int64_t expiry_seconds = 24 * 3600);

  void save(const ErrorContext& ctx) const;
  std::optional<ErrorContext> load() const;

  const std::filesystem::path& directory() const noexcept { return directory_; }
  std::filesystem::path file() const { return directory_ / kFileName; }

  /// Test hook run after the temp file is complete and before the rename.
  std::function<void(const std::filesystem::path& temp_file)> before_rename;
  /// Receives warnings such as a corrupt store being ignored.
  std::function<void(const std::string&)> on_warning;

 private:
  std::filesystem::path directory_;
  Clock clock_;
  std::int64_t expiry_seconds_;
};

/// `<dir>/.ccoach` — the workspace store beside a compiled output.
std::filesystem::path workspace_store_dir(const std::filesystem::path& output_dir);

/// Newest unexpired context among the workspace store under `cwd` and the
/// per-user store.
std::optional<ErrorContext> load_last_context(const std::filesystem::path& cwd,
                                              const std::filesystem::path& user_store_dir,
                                              const Clock& clock, std::int64_t expiry_seconds,
                                              const std::function<void(const std::string&)>& warn = {});

/// Saves into the workspace store, falling back to the per-user store when
/// the workspace is not writable. Returns the directory used.
std::filesystem::path save_context(const ErrorContext& ctx, const std::filesystem::path& output_dir,
                                   const std::filesystem::path& user_store_dir);

}  // namespace ccoach
