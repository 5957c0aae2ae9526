#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace ccoach {

enum class UninitTier { Off, Valgrind };

/// Settings for one invocation. Loaded from a key=value file and validated
/// before use.
struct ToolConfig {
  std::filesystem::path compiler_path;  // empty: resolve gcc, then clang, on PATH
  std::string model_name = "gpt-3.5-turbo-0301";
  std::string api_base_url = "https://api.openai.com/v1";
  std::string api_key_env_var = "CCOACH_API_KEY";
  bool exam_mode = false;
  int rate_limit_window_seconds = 600;
  int rate_limit_max_calls = 5;
  int token_budget = 4096;
  bool strip_code_blocks = false;
  std::filesystem::path log_directory;    // empty: telemetry disabled
  std::filesystem::path state_directory;  // per-user fallback store, guardrail state

  double temperature = 0.0;
  std::string timezone;  // TZ name for the night-window split; empty: local time
  std::filesystem::path rules_file;  // empty: bundled table
  int context_expiry_hours = 24;
  std::string telemetry_salt;
  std::string student_id_pattern = "[A-Za-z][0-9]{7}";
  UninitTier uninit_tier = UninitTier::Off;
  std::filesystem::path crash_shim;  // object linked into student binaries when set
  std::filesystem::path debugger = "gdb";
  bool capture_locals = true;
  bool show_sanitizer_report = false;
};

/// Throws ConfigError when an invariant does not hold.
void validate(const ToolConfig& config);

/// Applies key=value lines on top of `base`. Unknown keys are rejected.
ToolConfig parse_config(const std::string& text, ToolConfig base = {});

/// Reads $CCOACH_CONFIG, else ~/.ccoach.conf, else defaults. Home-relative
/// defaults are filled in for the state and log directories.
ToolConfig load_config();

std::filesystem::path home_directory();

}  // namespace ccoach
