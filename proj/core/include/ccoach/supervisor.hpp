#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccoach/config.hpp"
#include "ccoach/context.hpp"
#include "ccoach/runtime_report.hpp"

namespace ccoach {

inline constexpr std::string_view kRealSuffix = ".real";

/// Written at build time; the launcher reads it when the program fails.
struct BuildSnapshot {
  std::filesystem::path real_binary;
  std::filesystem::path snapshot_file;
  std::string binary_hash;
};

/// Moves the compiled program to `<binary>.real`, stores the source snapshot
/// keyed by the binary's hash in the workspace store, and writes a launcher
/// script at `binary` that runs `<self> --supervise`.
/// Throws IoError.
BuildSnapshot instrument_build(const std::filesystem::path& binary,
                               const std::vector<std::filesystem::path>& sources,
                               const std::filesystem::path& self_executable);

/// Reads a snapshot file written by instrument_build.
ErrorContext load_snapshot(const std::filesystem::path& snapshot_file);

/// Sanitizer option variables the supervisor sets for the child.
std::map<std::string, std::string> sanitizer_environment(bool for_debugger);

struct SuperviseRequest {
  std::filesystem::path real_binary;
  std::filesystem::path snapshot_file;
  std::vector<std::string> argv;  // program arguments, without argv[0]
};

struct SuperviseResult {
  int exit_status = 0;  // exit code, or 128 + signal
  int term_signal = 0;
  std::optional<RuntimeReport> report;
  std::optional<ErrorContext> context;  // set iff report is set
  bool stdin_consumed = false;
};

struct SuperviseHooks {
  /// Child stderr that is not part of a sanitizer report, as it arrives.
  std::function<void(std::string_view)> forward_stderr;
};

/// Runs the real program. stdout is inherited untouched; stderr is scanned
/// for reports; fatal signals and crash records are detected. On failure a
/// RuntimeReport and the matching run-time ErrorContext are produced (locals
/// included when they can be captured).
SuperviseResult supervise_run(const SuperviseRequest& request, const ToolConfig& config,
                              const SuperviseHooks& hooks, const Clock& clock = system_clock_seconds);

/// Re-runs the program under the debugger in batch mode and reads the
/// variables of the failing frame, plus any indexed expressions on
/// `error_source_line`. Returns nothing when no debugger is available or the
/// run cannot be reproduced.
std::optional<LocalsSnapshot> capture_locals(const std::filesystem::path& binary,
                                             const RuntimeReport& report,
                                             const std::vector<std::string>& argv,
                                             const ToolConfig& config,
                                             std::string_view error_source_line = {});

/// Indexed expressions such as `numbers[i]` appearing in a source line.
std::vector<std::string> indexed_expressions(std::string_view source_line);

/// The crash shim writes its record to `<program>.crash`.
inline constexpr std::string_view kCrashSuffix = ".crash";

/// Frame variables from a gdb transcript produced by capture_locals.
std::optional<LocalsSnapshot> parse_gdb_locals(std::string_view transcript);

/// Crash record left by the optional native crash shim:
/// "CCRS", version 0x01, then little-endian int32 signal, uint64 fault
/// address, uint32 frame count, 64 x uint64 frames, int32 pid, int64
/// monotonic timestamp.
struct CrashRecord {
  static constexpr std::size_t kMaxFrames = 64;
  static constexpr std::size_t kSize = 4 + 1 + 4 + 8 + 4 + 8 * kMaxFrames + 4 + 8;

  int signal_number = 0;
  unsigned long long fault_address = 0;
  std::vector<unsigned long long> frame_addresses;
  int pid = 0;
  long long monotonic_timestamp = 0;

  bool operator==(const CrashRecord&) const = default;
};

std::optional<CrashRecord> parse_crash_record(std::string_view bytes);
std::string encode_crash_record(const CrashRecord& record);

/// Maps the record's frames to the first one in `sources`.
RuntimeReport report_from_crash_record(const CrashRecord& record, const std::filesystem::path& binary,
                                       const std::vector<std::string>& sources,
                                       const Symbolizer& symbolize);

}  // namespace ccoach
