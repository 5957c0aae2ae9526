#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccoach {

enum class StdinMode { Inherit, Null };

struct ProcessOptions {
  std::vector<std::string> argv;
  /// Variables set (or replaced) in the child's environment.
  std::map<std::string, std::string> env_overrides;
  bool capture_stdout = true;
  bool capture_stderr = true;
  StdinMode stdin_mode = StdinMode::Inherit;
  /// Replaces the child's stdin with this descriptor when set.
  std::optional<int> stdin_fd;
  /// Called with each block of stderr as it arrives (in addition to capture).
  std::function<void(std::string_view)> on_stderr;
  std::optional<std::chrono::milliseconds> timeout;
  /// Child's working directory; empty: inherit.
  std::filesystem::path working_directory;
};

struct ProcessResult {
  int exit_code = 0;         // valid when term_signal == 0
  int term_signal = 0;       // signal that killed the child, 0 if it exited
  bool timed_out = false;
  std::string out;
  std::string err;

  bool succeeded() const noexcept { return term_signal == 0 && exit_code == 0; }
  /// Shell-style status: exit code, or 128 + signal.
  int shell_status() const noexcept { return term_signal ? 128 + term_signal : exit_code; }
};

/// Runs a child process to completion, draining its pipes concurrently.
/// Throws IoError if the process cannot be started.
ProcessResult run_process(const ProcessOptions& options);

/// Looks up an executable on PATH (or accepts an explicit path).
std::optional<std::filesystem::path> find_executable(std::string_view name);

std::string signal_name(int signal_number);

}  // namespace ccoach
