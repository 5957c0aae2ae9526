#include <array>
#include <regex>
#include <sstream>

#include "ccoach/process.hpp"
#include "ccoach/runtime_report.hpp"

namespace ccoach {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::pair<SanitizerKind, std::string_view>, 8> kKindNames{{
    {SanitizerKind::HeapBufferOverflow, "heap-buffer-overflow"},
    {SanitizerKind::StackBufferOverflow, "stack-buffer-overflow"},
    {SanitizerKind::UseAfterFree, "use-after-free"},
    {SanitizerKind::NullDeref, "null-deref"},
    {SanitizerKind::IntegerDivZero, "integer-div-zero"},
    {SanitizerKind::Leak, "leak"},
    {SanitizerKind::UseOfUninitialized, "use-of-uninitialized"},
    {SanitizerKind::Other, "other"},
}};

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

enum class Tool { Asan, Ubsan, Msan, Valgrind };

struct Header {
  Tool tool;
  std::size_t line_index;
  std::string text;
  std::string ubsan_file;
  int ubsan_line = 0;
};

const std::regex& asan_error_re() {
  static const std::regex re(R"(^==[0-9]+==\s*ERROR: (AddressSanitizer|LeakSanitizer): (.*)$)");
  return re;
}
const std::regex& msan_re() {
  static const std::regex re(R"(^==[0-9]+==\s*WARNING: MemorySanitizer: (.*)$)");
  return re;
}
const std::regex& ubsan_re() {
  static const std::regex re(R"(^(.+?):([0-9]+):(?:[0-9]+:)? runtime error: (.*)$)");
  return re;
}
const std::regex& valgrind_error_re() {
  static const std::regex re(
      R"(^==[0-9]+== ((?:Invalid (?:read|write|free).*)|(?:Conditional jump or move depends on uninitialised.*)|(?:Use of uninitialised value.*)|(?:Syscall param .* uninitialised.*)|(?:Process terminating with default action of signal.*)|(?:.*bytes in [0-9,]+ blocks are definitely lost.*)|(?:Mismatched free.*))$)");
  return re;
}

std::optional<Header> find_header(const std::vector<std::string_view>& lines) {
  std::smatch m;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line(lines[i]);
    if (std::regex_match(line, m, asan_error_re())) return Header{Tool::Asan, i, m[2].str(), {}, 0};
    if (std::regex_match(line, m, msan_re())) return Header{Tool::Msan, i, m[1].str(), {}, 0};
    if (std::regex_match(line, m, ubsan_re())) {
      return Header{Tool::Ubsan, i, m[3].str(), m[1].str(), std::stoi(m[2].str())};
    }
    if (std::regex_match(line, m, valgrind_error_re())) return Header{Tool::Valgrind, i, m[1].str(), {}, 0};
  }
  return std::nullopt;
}

SanitizerKind classify(const Header& header, const std::vector<std::string_view>& lines) {
  const std::string& h = header.text;
  switch (header.tool) {
    case Tool::Asan:
      if (contains(h, "heap-buffer-overflow")) return SanitizerKind::HeapBufferOverflow;
      if (contains(h, "stack-buffer-overflow") || contains(h, "stack-buffer-underflow")) {
        return SanitizerKind::StackBufferOverflow;
      }
      if (contains(h, "heap-use-after-free")) return SanitizerKind::UseAfterFree;
      if (contains(h, "detected memory leaks")) return SanitizerKind::Leak;
      if (contains(h, "FPE")) return SanitizerKind::IntegerDivZero;
      if (contains(h, "SEGV")) {
        for (std::size_t i = header.line_index; i < lines.size(); ++i) {
          if (contains(lines[i], "points to the zero page")) return SanitizerKind::NullDeref;
        }
        if (contains(h, "address 0x000000000000 ")) return SanitizerKind::NullDeref;
      }
      return SanitizerKind::Other;
    case Tool::Msan:
      return contains(h, "use-of-uninitialized-value") ? SanitizerKind::UseOfUninitialized : SanitizerKind::Other;
    case Tool::Ubsan:
      if (contains(h, "division by zero")) return SanitizerKind::IntegerDivZero;
      if (contains(h, "null pointer")) return SanitizerKind::NullDeref;
      if (contains(h, "out of bounds for type")) return SanitizerKind::StackBufferOverflow;
      return SanitizerKind::Other;
    case Tool::Valgrind:
      if (contains(h, "uninitialised")) return SanitizerKind::UseOfUninitialized;
      if (contains(h, "definitely lost")) return SanitizerKind::Leak;
      if (contains(h, "signal 8")) return SanitizerKind::IntegerDivZero;
      if (contains(h, "Invalid read") || contains(h, "Invalid write") || contains(h, "signal 11")) {
        for (std::size_t i = header.line_index + 1; i < lines.size() && i < header.line_index + 40; ++i) {
          auto line = lines[i];
          if (contains(line, "Address 0x0 is not stack'd")) return SanitizerKind::NullDeref;
          if (contains(line, "free'd")) return SanitizerKind::UseAfterFree;
          if (contains(line, "bytes after a block") || contains(line, "bytes before a block")) {
            return SanitizerKind::HeapBufferOverflow;
          }
        }
      }
      return SanitizerKind::Other;
  }
  return SanitizerKind::Other;
}

struct RawFrame {
  std::string function;
  std::string file;
  int line = 0;
  std::string module;
  unsigned long long offset = 0;
  int index = 0;
  bool symbolized = false;
};

std::optional<RawFrame> parse_frame(std::string_view text) {
  static const std::regex asan_frame(R"(^\s*#([0-9]+) 0x[0-9a-fA-F]+ (?:in (\S+) )?(.*)$)");
  static const std::regex file_line(R"(^(.+?):([0-9]+)(?::[0-9]+)?$)");
  static const std::regex module_off(R"(^\((.+)\+0x([0-9a-fA-F]+)\)(?: \(BuildId: [0-9a-fA-F]+\))?$)");
  static const std::regex valgrind_frame(R"(^==[0-9]+==\s+(?:at|by) 0x[0-9A-Fa-f]+: (\S+) \((.+?):([0-9]+)\)$)");

  std::string line(text);
  std::smatch m;
  if (std::regex_match(line, m, valgrind_frame)) {
    RawFrame f;
    f.function = m[1].str();
    f.file = m[2].str();
    f.line = std::stoi(m[3].str());
    f.symbolized = true;
    return f;
  }
  if (!std::regex_match(line, m, asan_frame)) return std::nullopt;
  RawFrame f;
  f.index = std::stoi(m[1].str());
  f.function = m[2].str();
  std::string rest = m[3].str();
  std::smatch r;
  if (std::regex_match(rest, r, module_off)) {
    f.module = r[1].str();
    f.offset = std::stoull(r[2].str(), nullptr, 16);
  } else if (std::regex_match(rest, r, file_line)) {
    f.file = r[1].str();
    f.line = std::stoi(r[2].str());
    f.symbolized = true;
  }
  return f;
}

bool is_valgrind_frame_line(std::string_view line) {
  static const std::regex re(R"(^==[0-9]+==\s+(?:at|by) 0x.*$)");
  return std::regex_match(std::string(line), re);
}

std::optional<RawFrame> resolve(RawFrame frame, const Symbolizer& symbolize) {
  if (frame.symbolized) return frame;
  if (frame.module.empty() || !symbolize) return std::nullopt;
  unsigned long long offset = frame.offset;
  if (frame.index > 0 && offset > 0) offset -= 1;
  auto sym = symbolize(frame.module, offset);
  if (!sym) return std::nullopt;
  if (!sym->function.empty()) frame.function = sym->function;
  frame.file = sym->file;
  frame.line = sym->line;
  frame.symbolized = true;
  return frame;
}

/// First frame of the first stack after `from` that belongs to the sources.
std::optional<std::pair<RawFrame, std::string>> first_own_frame(const std::vector<std::string_view>& lines,
                                                                std::size_t from,
                                                                const std::vector<std::string>& sources,
                                                                const Symbolizer& symbolize,
                                                                bool valgrind) {
  bool in_stack = false;
  for (std::size_t i = from; i < lines.size(); ++i) {
    auto line = lines[i];
    bool frame_line = valgrind ? is_valgrind_frame_line(line) : parse_frame(line).has_value();
    if (!frame_line) {
      if (in_stack) break;
      continue;
    }
    in_stack = true;
    auto raw = parse_frame(line);
    if (!raw) continue;
    auto frame = resolve(*raw, symbolize);
    if (!frame || frame->file.empty()) continue;
    if (auto source = match_source(frame->file, sources)) return std::make_pair(*frame, *source);
  }
  return std::nullopt;
}

std::size_t line_offset(std::string_view text, std::size_t line_index) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < line_index; ++i) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) return text.size();
    pos = nl + 1;
  }
  return pos;
}

}  // namespace

std::string_view to_string(SanitizerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "other";
}

std::optional<SanitizerKind> sanitizer_kind_from_string(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::string describe(const RuntimeCause& cause) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SignalCause>) {
          return c.name;
        } else if constexpr (std::is_same_v<T, SanitizerCause>) {
          return std::string(to_string(c.kind));
        } else {
          return signal_name(c.signal_number);
        }
      },
      cause);
}

std::optional<std::string> match_source(std::string_view frame_file, const std::vector<std::string>& sources) {
  if (frame_file.empty()) return std::nullopt;
  fs::path frame{std::string(frame_file)};
  for (const auto& s : sources) {
    if (s == frame_file) return s;
  }
  std::error_code ec;
  auto frame_canon = fs::weakly_canonical(frame, ec);
  if (!ec) {
    for (const auto& s : sources) {
      std::error_code ec2;
      auto canon = fs::weakly_canonical(s, ec2);
      if (!ec2 && canon == frame_canon) return s;
    }
  }
  auto ends_with_path = [](const fs::path& longer, const fs::path& shorter) {
    auto a = longer.lexically_normal().string();
    auto b = shorter.lexically_normal().string();
    return a.size() > b.size() && a.compare(a.size() - b.size(), b.size(), b) == 0 &&
           a[a.size() - b.size() - 1] == '/';
  };
  for (const auto& s : sources) {
    if (ends_with_path(frame, s) || ends_with_path(s, frame)) return s;
  }
  std::optional<std::string> by_name;
  int count = 0;
  for (const auto& s : sources) {
    if (fs::path(s).filename() == frame.filename()) {
      by_name = s;
      ++count;
    }
  }
  return count == 1 ? by_name : std::nullopt;
}

std::optional<RuntimeReport> parse_sanitizer_report(std::string_view stderr_text,
                                                    const std::vector<std::string>& sources,
                                                    const Symbolizer& symbolize) {
  auto lines = split_lines(stderr_text);
  auto header = find_header(lines);
  if (!header) return std::nullopt;

  RuntimeReport report;
  std::size_t start_line = header->line_index;
  if (header->tool == Tool::Asan && start_line > 0 && contains(lines[start_line - 1], "DEADLYSIGNAL")) {
    --start_line;
  }
  report.raw_report = std::string(stderr_text.substr(line_offset(stderr_text, start_line)));
  report.cause = SanitizerCause{classify(*header, lines), header->text};

  bool valgrind = header->tool == Tool::Valgrind;
  auto own = first_own_frame(lines, header->line_index + 1, sources, symbolize, valgrind);
  if (header->tool == Tool::Ubsan) {
    if (auto source = match_source(header->ubsan_file, sources)) {
      report.error_file = *source;
      report.error_line = header->ubsan_line;
      if (own && own->second == *source) report.function_name = own->first.function;
      return report;
    }
  }
  if (own) {
    report.error_file = own->second;
    report.error_line = own->first.line > 0 ? std::optional<int>(own->first.line) : std::nullopt;
    if (!own->first.function.empty()) report.function_name = own->first.function;
  }
  return report;
}

Symbolizer addr2line_symbolizer() {
  auto tool = find_executable("addr2line");
  if (!tool) return {};
  return [tool = tool->string()](const std::string& module,
                                 unsigned long long offset) -> std::optional<SymbolizedFrame> {
    std::ostringstream addr;
    addr << "0x" << std::hex << offset;
    ProcessOptions options;
    options.argv = {tool, "-f", "-e", module, addr.str()};
    options.stdin_mode = StdinMode::Null;
    options.timeout = std::chrono::seconds(10);
    ProcessResult result;
    try {
      result = run_process(options);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (!result.succeeded()) return std::nullopt;
    auto out = split_lines(result.out);
    if (out.size() < 2) return std::nullopt;
    static const std::regex loc(R"(^(.+):([0-9]+)(?: \(discriminator [0-9]+\))?$)");
    std::smatch m;
    std::string where(out[1]);
    if (!std::regex_match(where, m, loc) || m[1].str() == "??") return std::nullopt;
    SymbolizedFrame frame;
    frame.function = out[0] == "??" ? std::string() : std::string(out[0]);
    frame.file = m[1].str();
    frame.line = std::stoi(m[2].str());
    if (frame.line == 0) return std::nullopt;
    return frame;
  };
}

}  // namespace ccoach
