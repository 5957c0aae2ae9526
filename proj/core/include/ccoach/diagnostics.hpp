#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccoach {

enum class Severity { Error, Warning, Note };

std::string_view to_string(Severity severity);

/// One compiler message in the classic `FILE:LINE[:COL]: SEVERITY: MESSAGE`
/// form. `raw_text` holds the header line plus any snippet/caret lines that
/// followed it, byte for byte, including line terminators.
struct Diagnostic {
  std::string file;
  int line = 1;
  std::optional<int> column;
  Severity severity = Severity::Error;
  std::string message;
  std::string raw_text;

  bool operator==(const Diagnostic&) const = default;
};

struct ParsedDiagnostics {
  std::vector<Diagnostic> diagnostics;
  std::vector<std::string> unparsed;

  /// Concatenates raw_text and unparsed lines in their original order.
  std::string reconstruct() const;

  /// Original order: (is_diagnostic, index into the matching vector).
  std::vector<std::pair<bool, std::size_t>> order;
};

/// Total function: every input line lands in exactly one diagnostic's
/// raw_text or in `unparsed`.
ParsedDiagnostics parse_diagnostics(std::string_view stderr_text);

struct CompileOutcome {
  int exit_status = 0;
  std::vector<Diagnostic> diagnostics;
  std::vector<std::string> unparsed_lines;
  std::optional<std::filesystem::path> output_binary;
  std::string compiler_stdout;
  std::string compiler_stderr;
};

/// First Error, else first Warning, else nothing. Notes never qualify.
std::optional<Diagnostic> select_primary_diagnostic(const std::vector<Diagnostic>& diagnostics);

/// The line a student should look at for `diag`. Compilers report a missing
/// terminator ("expected ';' before ...") at the next token; when that token
/// starts its line, the culprit is the previous non-blank line.
int effective_error_line(const Diagnostic& diag, std::string_view source_text);

}  // namespace ccoach
