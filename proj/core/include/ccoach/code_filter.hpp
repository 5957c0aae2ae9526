#pragma once

#include <string>
#include <string_view>

namespace ccoach {

inline constexpr std::string_view kCodeOmitted = "[code omitted — try writing it yourself!]";

/// Streaming fenced-code-block remover. Text is processed a line at a time;
/// a fence is a line whose first non-blank characters (at most three spaces
/// in) are three or more backticks or tildes. A block closes on a line made
/// only of the same fence character, at least as long as the opener. The
/// whole block, fences included, becomes one kCodeOmitted line; an
/// unterminated block is replaced from its opening fence to the end.
class CodeBlockFilter {
 public:
  /// Returns text that is safe to emit now.
  std::string feed(std::string_view text);
  /// Flushes the trailing partial line.
  std::string finish();

 private:
  std::string process_line(std::string_view line);
  static bool may_open_fence(std::string_view partial);

  std::string pending_;
  bool passthrough_ = false;
  bool in_block_ = false;
  char fence_char_ = 0;
  std::size_t fence_len_ = 0;
};

std::string strip_code_blocks(std::string_view text);

}  // namespace ccoach
