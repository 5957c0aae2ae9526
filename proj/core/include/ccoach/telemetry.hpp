#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccoach {

enum class EventKind {
  CompileOk,
  CompileError,
  RuntimeError,
  HelpCompile,
  HelpRuntime,
  HelpRefused,
  ToolError,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view text);

struct UsageEvent {
  std::int64_t timestamp = 0;  // UTC seconds
  EventKind kind = EventKind::CompileOk;
  std::string user_hash;  // 16 hex chars
  std::int64_t source_bytes = 0;
  std::string week;  // ISO week label, e.g. "2026-W42"

  bool operator==(const UsageEvent&) const = default;
};

inline constexpr int kLogSchemaVersion = 1;

/// ISO 8601 week label of a UTC timestamp.
std::string iso_week_label(std::int64_t timestamp);

/// One tab-separated line, schema version first, newline terminated.
std::string format_event(const UsageEvent& event);
std::optional<UsageEvent> parse_event(std::string_view line);

/// Pseudonymous user id: keyed digest of the login name under the salt.
std::string hash_user(std::string_view salt, std::string_view user_name);

struct AnonymizeOptions {
  std::string student_id_pattern = "[A-Za-z][0-9]{7}";
  std::vector<std::string> known_identifiers;
};

inline constexpr std::string_view kRedacted = "[redacted]";

struct AnonymizedSource {
  std::string text;
  std::string file_name;
};

/// Scrubs student ids, e-mail addresses, known identifiers, and names after
/// header labels ("Author:", "Name:", "Written by") from C comments and from
/// the file name. Code outside comments, string literals included, is left
/// byte-identical. Applying it twice changes nothing further.
AnonymizedSource anonymize(std::string_view source_text, std::string_view file_name,
                           const AnonymizeOptions& options);

/// Scrubs one free-text fragment (a comment body or a file name).
std::string scrub_text(std::string_view text, const AnonymizeOptions& options, bool label_names);

/// Append-only daily log files `usage-YYYY-MM-DD.log` under a directory.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path directory) : directory_(std::move(directory)) {}

  /// One write(2) per line on an O_APPEND descriptor, fsync before close.
  /// Throws IoError.
  void append(const UsageEvent& event) const;

  /// Never throws; failures go to `warn`.
  void append_quietly(const UsageEvent& event,
                      const std::function<void(const std::string&)>& warn) const;

  /// Events from every log file whose day lies in [from_day, to_day]
  /// (YYYY-MM-DD, inclusive; empty bound = open).
  std::vector<UsageEvent> read_all(std::string_view from_day = {}, std::string_view to_day = {}) const;

  std::filesystem::path file_for(std::int64_t timestamp) const;
  const std::filesystem::path& directory() const noexcept { return directory_; }

 private:
  std::filesystem::path directory_;
};

/// A --help occurrence with its anonymized inputs and the reply, written as
/// one JSON file under `<log dir>/help/`.
struct HelpRecord {
  std::int64_t timestamp = 0;
  std::string user_hash;
  std::string phase;
  std::string file_name;
  std::string source;
  std::optional<int> error_line;
  std::string compiler_message;
  std::string response;
};

void write_help_record(const std::filesystem::path& log_directory, const HelpRecord& record);

}  // namespace ccoach
