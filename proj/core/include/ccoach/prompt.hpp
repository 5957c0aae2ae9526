#pragma once

#include <string>
#include <string_view>

#include "ccoach/context.hpp"

namespace ccoach {

inline constexpr std::string_view kSystemMessage =
    "You are a tutor helping a student.\n"
    "Do not fix the program.\n"
    "Do not provide code.";

inline constexpr std::string_view kOmittedMarker = "/* ... omitted ... */";

struct PromptBundle {
  std::string system_message;
  std::string user_message;
  int estimated_tokens = 0;
  bool truncated = false;

  bool operator==(const PromptBundle&) const = default;
};

/// Rough size: one token per four bytes, rounded up.
int estimate_tokens(std::string_view text);

/// Keeps a contiguous window of lines around `error_line` within
/// `budget_tokens`; elided regions become a marker line.
std::string truncate_to_budget(std::string_view source, int error_line, int budget_tokens);

/// Source block for the prompt: one file verbatim, several files each
/// preceded by a "// File: name" line.
std::string render_sources(const ErrorContext& ctx);

/// Throws EmptyContext when there is nothing to explain.
PromptBundle build_prompt(const ErrorContext& ctx, int token_budget);

/// The bundle as it would appear in a transcript ("system:content:" /
/// "user:content:" blocks).
std::string format_bundle(const PromptBundle& bundle);

}  // namespace ccoach
