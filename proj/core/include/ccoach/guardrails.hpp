#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "ccoach/config.hpp"

namespace ccoach {

inline constexpr std::string_view kSparingUseWarning =
    "You have asked for a lot of AI explanations in a short time. Use --help sparingly,\n"
    "and make sure you always understand the code you are writing.";

inline constexpr std::string_view kExamModeRefusal =
    "AI explanations are not available in this environment.";

/// Recent help calls, oldest first; holds at most rate_limit_max_calls entries.
struct GuardrailState {
  std::deque<std::int64_t> call_timestamps;
  int warnings_issued = 0;

  bool operator==(const GuardrailState&) const = default;
};

struct Proceed {};
struct ProceedWithWarning {
  std::string text;
};
struct Refuse {
  std::string text;
};
using GuardrailDecision = std::variant<Proceed, ProceedWithWarning, Refuse>;

/// Exam mode refuses. Otherwise the call is recorded; more than
/// rate_limit_max_calls calls inside the window (this one included) earns a
/// warning but never a refusal.
GuardrailDecision check_guardrails(GuardrailState& state, std::int64_t now, const ToolConfig& config);

GuardrailState load_guardrail_state(const std::filesystem::path& file);
void save_guardrail_state(const GuardrailState& state, const std::filesystem::path& file);

}  // namespace ccoach
