#include "ccoach/config.hpp"

#include <pwd.h>
#include <unistd.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ccoach/errors.hpp"

namespace ccoach {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "yes" || value == "1" || value == "on") return true;
  if (value == "false" || value == "no" || value == "0" || value == "off") return false;
  throw ConfigError("config: " + std::string(key) + " expects true/false, got '" + std::string(value) + "'");
}

int parse_int(std::string_view key, std::string_view value) {
  int result = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), result);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("config: " + std::string(key) + " expects an integer, got '" + std::string(value) + "'");
  }
  return result;
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    double d = std::stod(std::string(value), &used);
    if (used == value.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: " + std::string(key) + " expects a number, got '" + std::string(value) + "'");
}

}  // namespace

void validate(const ToolConfig& config) {
  if (config.rate_limit_window_seconds <= 0) {
    throw ConfigError("config: rate_limit_window_seconds must be > 0");
  }
  if (config.rate_limit_max_calls < 1) {
    throw ConfigError("config: rate_limit_max_calls must be >= 1");
  }
  if (config.token_budget < 512) {
    throw ConfigError("config: token_budget must be >= 512");
  }
  if (config.context_expiry_hours <= 0) {
    throw ConfigError("config: context_expiry_hours must be > 0");
  }
}

ToolConfig parse_config(const std::string& text, ToolConfig config) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));

    if (key == "compiler") config.compiler_path = std::string(value);
    else if (key == "model") config.model_name = std::string(value);
    else if (key == "api_base_url") config.api_base_url = std::string(value);
    else if (key == "api_key_env") config.api_key_env_var = std::string(value);
    else if (key == "exam_mode") config.exam_mode = parse_bool(key, value);
    else if (key == "rate_limit_window") config.rate_limit_window_seconds = parse_int(key, value);
    else if (key == "rate_limit_max_calls") config.rate_limit_max_calls = parse_int(key, value);
    else if (key == "token_budget") config.token_budget = parse_int(key, value);
    else if (key == "strip_code_blocks") config.strip_code_blocks = parse_bool(key, value);
    else if (key == "log_directory") config.log_directory = std::string(value);
    else if (key == "state_directory") config.state_directory = std::string(value);
    else if (key == "temperature") config.temperature = parse_double(key, value);
    else if (key == "timezone") config.timezone = std::string(value);
    else if (key == "rules_file") config.rules_file = std::string(value);
    else if (key == "context_expiry_hours") config.context_expiry_hours = parse_int(key, value);
    else if (key == "telemetry_salt") config.telemetry_salt = std::string(value);
    else if (key == "student_id_pattern") config.student_id_pattern = std::string(value);
    else if (key == "uninit_tier") {
      if (value == "off" || value == "none") config.uninit_tier = UninitTier::Off;
      else if (value == "valgrind") config.uninit_tier = UninitTier::Valgrind;
      else throw ConfigError("config: uninit_tier expects off or valgrind");
    } else if (key == "crash_shim") config.crash_shim = std::string(value);
    else if (key == "debugger") config.debugger = std::string(value);
    else if (key == "capture_locals") config.capture_locals = parse_bool(key, value);
    else if (key == "show_sanitizer_report") config.show_sanitizer_report = parse_bool(key, value);
    else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return config;
}

std::filesystem::path home_directory() {
  if (const char* home = std::getenv("HOME"); home && *home) return home;
  if (const passwd* pw = ::getpwuid(::getuid()); pw && pw->pw_dir) return pw->pw_dir;
  return "/tmp";
}

ToolConfig load_config() {
  namespace fs = std::filesystem;
  ToolConfig config;
  fs::path home = home_directory();
  config.state_directory = home / ".ccoach";
  config.log_directory = home / ".ccoach" / "logs";

  fs::path file;
  if (const char* explicit_path = std::getenv("CCOACH_CONFIG"); explicit_path && *explicit_path) {
    file = explicit_path;
    if (!fs::exists(file)) throw ConfigError("config file not found: " + file.string());
  } else {
    file = home / ".ccoach.conf";
  }
  if (fs::exists(file)) {
    std::ifstream in(file);
    std::stringstream text;
    text << in.rdbuf();
    config = parse_config(text.str(), std::move(config));
  }
  validate(config);
  return config;
}

}  // namespace ccoach
