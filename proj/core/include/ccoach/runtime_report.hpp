#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ccoach {

enum class SanitizerKind {
  HeapBufferOverflow,
  StackBufferOverflow,
  UseAfterFree,
  NullDeref,
  IntegerDivZero,
  Leak,
  UseOfUninitialized,
  Other,
};

std::string_view to_string(SanitizerKind kind);
std::optional<SanitizerKind> sanitizer_kind_from_string(std::string_view text);

struct SignalCause {
  std::string name;  // "SIGSEGV"
  bool operator==(const SignalCause&) const = default;
};

struct SanitizerCause {
  SanitizerKind kind = SanitizerKind::Other;
  std::string detail;  // the report's own wording, used for Other
  bool operator==(const SanitizerCause&) const = default;
};

struct ShimCrashCause {
  int signal_number = 0;
  bool operator==(const ShimCrashCause&) const = default;
};

using RuntimeCause = std::variant<SignalCause, SanitizerCause, ShimCrashCause>;

/// Short label for a cause: the sanitizer kind or the signal name.
std::string describe(const RuntimeCause& cause);

struct RuntimeReport {
  RuntimeCause cause = SanitizerCause{};
  std::string error_file;
  std::optional<int> error_line;
  std::optional<std::string> function_name;
  std::string raw_report;

  bool operator==(const RuntimeReport&) const = default;
};

struct LocalVariable {
  std::string name;
  std::string rendered_value;
  bool is_uninitialized = false;
  bool operator==(const LocalVariable&) const = default;
};

struct StackFrame {
  std::string function_name;
  std::vector<LocalVariable> variables;
  bool operator==(const StackFrame&) const = default;
};

/// Innermost frame first.
struct LocalsSnapshot {
  std::vector<StackFrame> frames;
  bool operator==(const LocalsSnapshot&) const = default;
};

/// `name = value` lines, one per variable; caller frames get a header line.
std::string render_locals(const LocalsSnapshot& locals);

/// Resolves `binary+offset` to (function, file, line). Returns nothing when
/// the address cannot be mapped to source.
struct SymbolizedFrame {
  std::string function;
  std::string file;
  int line = 0;
};
using Symbolizer =
    std::function<std::optional<SymbolizedFrame>(const std::string& module, unsigned long long offset)>;

/// addr2line-backed symbolizer.
Symbolizer addr2line_symbolizer();

/// True if `frame_file` names one of `sources` (exact, canonical, or path suffix).
/// Returns the matching source as the student wrote it.
std::optional<std::string> match_source(std::string_view frame_file,
                                        const std::vector<std::string>& sources);

/// Finds the first sanitizer, UBSan, or valgrind report in `stderr_text` and
/// locates the first stack frame in one of `sources`. Unsymbolized frames
/// (`(module+0xoff)`) go through `symbolize` when provided.
std::optional<RuntimeReport> parse_sanitizer_report(std::string_view stderr_text,
                                                    const std::vector<std::string>& sources,
                                                    const Symbolizer& symbolize = {});

}  // namespace ccoach
