#include "ccoach/diagnostics.hpp"

#include <charconv>
#include <regex>

namespace ccoach {
namespace {

const std::regex& header_pattern() {
  static const std::regex re(R"(^(.+?):([0-9]+):(?:([0-9]+):)? (fatal error|error|warning|note): (.*)$)");
  return re;
}

// Lines that close the current diagnostic instead of continuing it.
const std::regex& boundary_pattern() {
  static const std::regex re(
      R"(^(\S[^:]*: (In function|In member function|At top level|In instantiation|In file included)|)"
      R"(In file included from |\s+from \S.*[:,]$|[0-9]+ (warning|error)s? (and [0-9]+ (warning|error)s? )?generated\.|)"
      R"(collect2: |/usr/bin/ld|ld: |(clang|gcc|cc)(-[0-9.]+)?: ))");
  return re;
}

std::string_view strip_terminator(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

int to_int(std::string_view digits) {
  int value = 0;
  std::from_chars(digits.data(), digits.data() + digits.size(), value);
  return value;
}

Severity severity_from(std::string_view word) {
  if (word == "warning") return Severity::Warning;
  if (word == "note") return Severity::Note;
  return Severity::Error;
}

}  // namespace

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Note: return "note";
  }
  return "error";
}

std::string ParsedDiagnostics::reconstruct() const {
  std::string text;
  for (const auto& [is_diag, index] : order) {
    text += is_diag ? diagnostics[index].raw_text : unparsed[index];
  }
  return text;
}

ParsedDiagnostics parse_diagnostics(std::string_view stderr_text) {
  ParsedDiagnostics result;
  bool in_diagnostic = false;
  std::size_t pos = 0;
  while (pos < stderr_text.size()) {
    std::size_t nl = stderr_text.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? stderr_text.size() : nl + 1;
    std::string_view raw = stderr_text.substr(pos, end - pos);
    pos = end;

    std::string content(strip_terminator(raw));
    std::smatch m;
    if (std::regex_match(content, m, header_pattern())) {
      Diagnostic d;
      d.file = m[1].str();
      d.line = to_int(m[2].str());
      if (m[3].matched) d.column = to_int(m[3].str());
      d.severity = severity_from(m[4].str());
      d.message = m[5].str();
      d.raw_text = std::string(raw);
      if (d.line >= 1 && (!d.column || *d.column >= 1)) {
        result.order.emplace_back(true, result.diagnostics.size());
        result.diagnostics.push_back(std::move(d));
        in_diagnostic = true;
        continue;
      }
    }
    if (in_diagnostic && !std::regex_search(content, boundary_pattern())) {
      result.diagnostics.back().raw_text += raw;
      continue;
    }
    in_diagnostic = false;
    result.order.emplace_back(false, result.unparsed.size());
    result.unparsed.emplace_back(raw);
  }
  return result;
}

std::optional<Diagnostic> select_primary_diagnostic(const std::vector<Diagnostic>& diagnostics) {
  for (Severity wanted : {Severity::Error, Severity::Warning}) {
    for (const auto& d : diagnostics) {
      if (d.severity == wanted) return d;
    }
  }
  return std::nullopt;
}

int effective_error_line(const Diagnostic& diag, std::string_view source_text) {
  static const std::regex expected_before(R"(^expected .* before )");
  if (!diag.column || !std::regex_search(diag.message, expected_before)) {
    return diag.line;
  }
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= source_text.size()) {
    std::size_t nl = source_text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(source_text.substr(pos));
      break;
    }
    lines.push_back(source_text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (diag.line < 2 || static_cast<std::size_t>(diag.line) > lines.size()) return diag.line;
  std::string_view here = lines[diag.line - 1];
  auto first = here.find_first_not_of(" \t");
  if (first == std::string_view::npos) return diag.line;
  // gcc counts display columns (tab stop 8), clang counts bytes.
  int display = 0;
  for (std::size_t i = 0; i < first; ++i) display = here[i] == '\t' ? (display / 8 + 1) * 8 : display + 1;
  if (static_cast<int>(first) + 1 != *diag.column && display + 1 != *diag.column) {
    return diag.line;
  }
  for (int n = diag.line - 1; n >= 1; --n) {
    if (lines[n - 1].find_first_not_of(" \t\r") != std::string_view::npos) return n;
  }
  return diag.line;
}

}  // namespace ccoach
