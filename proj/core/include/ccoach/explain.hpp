#pragma once

#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "ccoach/context.hpp"

namespace ccoach {

/// One hand-written explanation. `pattern` is an ECMAScript regex searched in
/// the compiler message (compile time) or the runtime match text (run time).
/// The first non-empty capture group supplies {symbol}.
struct ExplainRule {
  std::string id;
  Phase phase = Phase::CompileTime;
  std::string pattern;
  std::string template_text;
  std::regex compiled;
};

struct RuleTable {
  int version = 1;
  std::vector<ExplainRule> rules;
};

/// Parses the rule table text format (see core/rules/default_rules.txt).
/// Throws RuleTableError on duplicate ids, bad regexes, unknown placeholders.
RuleTable parse_rules(std::string_view text);

std::string_view default_rules_text();
const RuleTable& default_rules();

/// The text rules are matched against for `ctx`.
std::string match_text(const ErrorContext& ctx);

/// First rule, in table order, whose phase and pattern match.
const ExplainRule* match_rules(const ErrorContext& ctx, const std::vector<ExplainRule>& rules);

/// Lines [first, last] shown around `error_line`: up to 3 either side, not
/// crossing the enclosing function's first or closing line when visible.
std::pair<int, int> excerpt_window(std::string_view source, int error_line, int radius = 3);

/// Excerpt with the error line marked by "-->".
std::string render_excerpt(std::string_view source, int error_line, int radius = 3);

/// Throws TemplateError when a placeholder cannot be resolved.
std::string render_enhanced_message(const ExplainRule& rule, const ErrorContext& ctx);

}  // namespace ccoach
