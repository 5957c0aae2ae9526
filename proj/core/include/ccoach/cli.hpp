#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ccoach/completion.hpp"
#include "ccoach/config.hpp"
#include "ccoach/context.hpp"

namespace ccoach {

inline constexpr std::string_view kProgramName = "ccoach";
inline constexpr std::string_view kVersion = "0.3.0";
inline constexpr std::string_view kHelpHint = "Don't understand? Get AI-generated with `ccoach --help`";

struct CompileMode {
  std::vector<std::filesystem::path> sources;
  std::filesystem::path output = "a.out";
  std::vector<std::string> passthrough;
  bool operator==(const CompileMode&) const = default;
};
struct HelpMode {
  bool operator==(const HelpMode&) const = default;
};
struct StatsMode {
  std::optional<std::string> from;
  std::optional<std::string> to;
  std::optional<std::string> term_start;
  bool csv = false;
  bool operator==(const StatsMode&) const = default;
};
struct EvalMode {
  std::filesystem::path input;
  std::optional<std::uint64_t> seed;
  bool operator==(const EvalMode&) const = default;
};
struct AssignMode {
  std::filesystem::path pairs;
  int reviewers = 4;
  int per_reviewer = 100;
  double overlap = 0.1;
  std::uint64_t seed = 1;
  bool operator==(const AssignMode&) const = default;
};
struct VersionMode {
  bool operator==(const VersionMode&) const = default;
};
struct UsageMode {
  bool operator==(const UsageMode&) const = default;
};
/// Internal: target of the launcher script written next to each build.
struct SuperviseMode {
  std::filesystem::path real_binary;
  std::filesystem::path snapshot;
  std::vector<std::string> args;
  bool operator==(const SuperviseMode&) const = default;
};

using InvocationMode = std::variant<CompileMode, HelpMode, StatsMode, EvalMode, AssignMode,
                                    VersionMode, UsageMode, SuperviseMode>;

/// Throws UsageError.
InvocationMode parse_args(const std::vector<std::string>& argv);

std::string usage_text();

/// Everything run() touches outside the process: streams, clock, paths, and
/// the network. Tests substitute each piece.
struct Environment {
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  Clock clock = system_clock_seconds;
  std::filesystem::path cwd;
  std::filesystem::path self_executable;
  std::string user_name;
  std::vector<std::string> known_identifiers;
  std::function<std::unique_ptr<ChatTransport>(const ToolConfig&)> make_transport;
  std::function<std::string(const std::string&)> get_env;
  std::function<void(std::chrono::milliseconds)> sleep;
  const std::atomic<bool>* cancelled = nullptr;
  /// Set by run() when a supervised program died from this signal; the
  /// caller re-raises it so the shell sees the same status.
  int child_signal = 0;

  /// Real process environment.
  static Environment system(std::ostream& out, std::ostream& err);
};

/// Runs one invocation and returns the process exit status.
int run(const InvocationMode& mode, const ToolConfig& config, Environment& env);

}  // namespace ccoach
