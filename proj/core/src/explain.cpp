#include "ccoach/explain.hpp"

#include <set>

#include "ccoach/errors.hpp"

namespace ccoach {

namespace {

const std::set<std::string, std::less<>> kPlaceholders{"file", "line", "function", "symbol"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_')) return false;
  }
  return true;
}

/// Names of `{name}` placeholders in order of appearance.
std::vector<std::string> placeholders_in(std::string_view text) {
  std::vector<std::string> names;
  for (std::size_t pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
    std::size_t end = text.find('}', pos);
    if (end == std::string_view::npos) break;
    std::string_view name = text.substr(pos + 1, end - pos - 1);
    bool identifier = !name.empty();
    for (char c : name) {
      if (!((c >= 'a' && c <= 'z') || c == '_')) identifier = false;
    }
    if (identifier) names.emplace_back(name);
  }
  return names;
}

void finish_rule(std::optional<ExplainRule>& rule, bool has_phase, RuleTable& table) {
  if (!rule) return;
  if (!has_phase) throw RuleTableError("rule " + rule->id + ": missing phase");
  if (rule->pattern.empty()) throw RuleTableError("rule " + rule->id + ": missing pattern");
  if (rule->template_text.empty()) throw RuleTableError("rule " + rule->id + ": missing template");
  try {
    rule->compiled = std::regex(rule->pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw RuleTableError("rule " + rule->id + ": bad pattern: " + e.what());
  }
  for (const auto& name : placeholders_in(rule->template_text)) {
    if (!kPlaceholders.contains(name)) {
      throw RuleTableError("rule " + rule->id + ": unknown placeholder {" + name + "}");
    }
    if (name == "symbol" && rule->compiled.mark_count() == 0) {
      throw RuleTableError("rule " + rule->id + ": {symbol} needs a capture group in the pattern");
    }
  }
  table.rules.push_back(std::move(*rule));
  rule.reset();
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

bool is_blank(std::string_view line) {
  return trim(line).empty();
}

bool starts_at_column_zero(std::string_view line) {
  return !line.empty() && line.front() != ' ' && line.front() != '\t' && line.front() != '\r' && !is_blank(line);
}

std::string symbol_of(const ExplainRule& rule, const std::string& text) {
  std::smatch m;
  if (!std::regex_search(text, m, rule.compiled)) return {};
  for (std::size_t i = 1; i < m.size(); ++i) {
    if (m[i].matched && m[i].length() > 0) return m[i].str();
  }
  return {};
}

}  // namespace

RuleTable parse_rules(std::string_view text) {
  RuleTable table;
  std::optional<ExplainRule> rule;
  bool has_phase = false;
  std::set<std::string, std::less<>> ids;
  int line_number = 0;
  for (std::string_view raw : lines_of(text)) {
    ++line_number;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto where = [&] { return "rules line " + std::to_string(line_number) + ": "; };
    if (line.front() == '[') {
      if (line.back() != ']') throw RuleTableError(where() + "unterminated section header");
      finish_rule(rule, has_phase, table);
      std::string id(trim(line.substr(1, line.size() - 2)));
      if (!valid_id(id)) throw RuleTableError(where() + "invalid rule id '" + id + "'");
      if (!ids.insert(id).second) throw RuleTableError(where() + "duplicate rule id '" + id + "'");
      rule = ExplainRule{};
      rule->id = id;
      has_phase = false;
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw RuleTableError(where() + "expected key = value");
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (!rule) {
      if (key != "version") throw RuleTableError(where() + "unexpected key '" + std::string(key) + "'");
      if (value != "1") throw RuleTableError(where() + "unsupported rule table version " + std::string(value));
      table.version = 1;
      continue;
    }
    if (key == "phase") {
      if (value == "compile") {
        rule->phase = Phase::CompileTime;
      } else if (value == "runtime") {
        rule->phase = Phase::RunTime;
      } else {
        throw RuleTableError(where() + "phase must be compile or runtime");
      }
      has_phase = true;
    } else if (key == "pattern") {
      rule->pattern = std::string(value);
    } else if (key == "template") {
      if (!rule->template_text.empty()) rule->template_text += '\n';
      rule->template_text += value;
    } else {
      throw RuleTableError(where() + "unknown key '" + std::string(key) + "'");
    }
  }
  finish_rule(rule, has_phase, table);
  return table;
}

const RuleTable& default_rules() {
  static const RuleTable table = parse_rules(default_rules_text());
  return table;
}

std::string match_text(const ErrorContext& ctx) {
  if (ctx.phase == Phase::CompileTime) {
    return ctx.primary_diagnostic ? ctx.primary_diagnostic->message : std::string();
  }
  if (!ctx.runtime_report) return {};
  return describe(ctx.runtime_report->cause) + "\n" + ctx.runtime_report->raw_report;
}

const ExplainRule* match_rules(const ErrorContext& ctx, const std::vector<ExplainRule>& rules) {
  std::string text = match_text(ctx);
  if (text.empty()) return nullptr;
  for (const auto& rule : rules) {
    if (rule.phase == ctx.phase && std::regex_search(text, rule.compiled)) return &rule;
  }
  return nullptr;
}

std::pair<int, int> excerpt_window(std::string_view source, int error_line, int radius) {
  auto lines = lines_of(source);
  int n = static_cast<int>(lines.size());
  if (n == 0) return {1, 0};
  error_line = std::clamp(error_line, 1, n);
  int lo = std::max(1, error_line - radius);
  int hi = std::min(n, error_line + radius);
  for (int k = error_line - 1; k >= lo; --k) {
    std::string_view line = lines[k - 1];
    if (!starts_at_column_zero(line)) continue;
    lo = line.front() == '}' ? k + 1 : k;
    break;
  }
  for (int k = error_line + 1; k <= hi; ++k) {
    std::string_view line = lines[k - 1];
    if (!starts_at_column_zero(line)) continue;
    hi = line.front() == '}' ? k : k - 1;
    break;
  }
  return {lo, hi};
}

std::string render_excerpt(std::string_view source, int error_line, int radius) {
  auto lines = lines_of(source);
  auto [lo, hi] = excerpt_window(source, error_line, radius);
  std::string out;
  for (int k = lo; k <= hi; ++k) {
    std::string_view line = lines[k - 1];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (k == error_line) {
      if (line.starts_with("    ")) {
        line.remove_prefix(4);
      } else if (line.starts_with("\t")) {
        line.remove_prefix(1);
      }
      out += "--> ";
    }
    out += line;
    out += '\n';
  }
  return out;
}

std::string render_enhanced_message(const ExplainRule& rule, const ErrorContext& ctx) {
  std::string file = ctx.error_file;
  if (file.empty() && ctx.primary_diagnostic) file = ctx.primary_diagnostic->file;
  std::optional<int> line = ctx.error_line;
  if (!line && ctx.primary_diagnostic) line = ctx.primary_diagnostic->line;
  std::optional<std::string> function;
  if (ctx.runtime_report && ctx.runtime_report->function_name) function = ctx.runtime_report->function_name;
  std::string symbol = symbol_of(rule, match_text(ctx));

  std::string body;
  const std::string& t = rule.template_text;
  for (std::size_t i = 0; i < t.size();) {
    if (t[i] == '{') {
      std::size_t end = t.find('}', i);
      if (end != std::string::npos) {
        std::string name = t.substr(i + 1, end - i - 1);
        if (kPlaceholders.contains(name)) {
          auto missing = [&] { return TemplateError("rule " + rule.id + ": cannot resolve {" + name + "}"); };
          if (name == "file") {
            if (file.empty()) throw missing();
            body += file;
          } else if (name == "line") {
            if (!line) throw missing();
            body += std::to_string(*line);
          } else if (name == "function") {
            if (!function) throw missing();
            body += *function;
          } else {
            if (symbol.empty()) throw missing();
            body += symbol;
          }
          i = end + 1;
          continue;
        }
      }
    }
    body.push_back(t[i]);
    ++i;
  }

  std::string out;
  const SourceFile* source = file.empty() ? nullptr : ctx.find_source(file);
  if (ctx.phase == Phase::CompileTime) {
    if (!file.empty() && line) {
      out += file + ":" + std::to_string(*line) + ": ";
    }
    out += body + "\n";
    if (source && line) out += "\n" + render_excerpt(source->text, *line);
    return out;
  }

  out += "Runtime error: " + body + "\n";
  if (!file.empty() && line) {
    out += "Execution stopped in ";
    if (function) out += *function + "() in ";
    out += file + " at line " + std::to_string(*line) + ":\n";
    if (source) out += "\n" + render_excerpt(source->text, *line);
  }
  if (ctx.locals && !ctx.locals->frames.empty() && !ctx.locals->frames.front().variables.empty()) {
    out += "Values when execution stopped:\n\n" + render_locals(*ctx.locals);
  }
  return out;
}

}  // namespace ccoach
