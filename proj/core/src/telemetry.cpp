#include "ccoach/telemetry.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <climits>
#include <cstring>
#include <ctime>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <regex>

#include "ccoach/errors.hpp"
#include "ccoach/hashing.hpp"

namespace ccoach {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 7> kKindNames{{
    {EventKind::CompileOk, "compile-ok"},
    {EventKind::CompileError, "compile-error"},
    {EventKind::RuntimeError, "runtime-error"},
    {EventKind::HelpCompile, "help-compile"},
    {EventKind::HelpRuntime, "help-runtime"},
    {EventKind::HelpRefused, "help-refused"},
    {EventKind::ToolError, "tool-error"},
}};

std::tm utc_tm(std::int64_t timestamp) {
  std::time_t t = static_cast<std::time_t>(timestamp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return tm;
}

std::string utc_format(std::int64_t timestamp, const char* format) {
  std::tm tm = utc_tm(timestamp);
  char buf[64];
  std::size_t n = std::strftime(buf, sizeof buf, format, &tm);
  return std::string(buf, n);
}

bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool is_hex16(std::string_view s) {
  return s.size() == 16 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

std::optional<std::int64_t> to_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::int64_t value = 0;
  bool negative = s.front() == '-';
  if (negative) s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return negative ? -value : value;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Replaces matches of `re` that are not glued to surrounding letters/digits.
std::string replace_bounded(const std::string& text, const std::regex& re) {
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    auto pos = static_cast<std::size_t>(it->position());
    auto end = pos + static_cast<std::size_t>(it->length());
    if (pos < last) continue;
    bool left_ok = pos == 0 || !is_alnum(text[pos - 1]);
    bool right_ok = end >= text.size() || !is_alnum(text[end]);
    if (!left_ok || !right_ok) continue;
    out.append(text, last, pos - last);
    out += kRedacted;
    last = end;
  }
  out.append(text, last, std::string::npos);
  return out;
}

std::string replace_known(const std::string& text, std::vector<std::string> identifiers) {
  std::erase_if(identifiers, [](const std::string& s) { return s.empty(); });
  std::sort(identifiers.begin(), identifiers.end(),
            [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
  std::string out = text;
  for (const auto& id : identifiers) {
    std::string lowered = lower(out);
    std::string needle = lower(id);
    std::string next;
    std::size_t last = 0;
    for (std::size_t pos = lowered.find(needle); pos != std::string::npos; pos = lowered.find(needle, pos + 1)) {
      if (pos < last) continue;
      std::size_t end = pos + needle.size();
      bool left_ok = pos == 0 || !is_alnum(out[pos - 1]);
      bool right_ok = end >= out.size() || !is_alnum(out[end]);
      if (!left_ok || !right_ok) continue;
      next.append(out, last, pos - last);
      next += kRedacted;
      last = end;
    }
    next.append(out, last, std::string::npos);
    out = std::move(next);
  }
  return out;
}

std::string replace_label_names(const std::string& text) {
  static const std::regex label(
      R"((?:\b(?:author|name|student|student name|by)\s*:|\b(?:written|created|made|coded)\s+by\s*:?)[ \t]*)",
      std::regex::icase);
  static const std::regex name_run(R"(^[A-Za-z][A-Za-z'\-]*(?:[ \t]+[A-Za-z][A-Za-z'\-]*)*)");
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), label); it != std::sregex_iterator(); ++it) {
    auto start = static_cast<std::size_t>(it->position() + it->length());
    if (start < last) continue;
    std::size_t line_end = text.find('\n', start);
    if (line_end == std::string::npos) line_end = text.size();
    std::string rest = text.substr(start, line_end - start);
    std::smatch m;
    if (!std::regex_search(rest, m, name_run, std::regex_constants::match_continuous)) continue;
    out.append(text, last, start - last);
    out += kRedacted;
    last = start + static_cast<std::size_t>(m.length());
  }
  out.append(text, last, std::string::npos);
  return out;
}

void write_line_atomically(const fs::path& file, std::string_view line) {
  if (line.size() > PIPE_BUF) throw IoError("log line exceeds the atomic write size");
  int fd = ::open(file.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0640);
  if (fd < 0) throw IoError("cannot open " + file.string() + ": " + std::strerror(errno));
  ssize_t n;
  do {
    n = ::write(fd, line.data(), line.size());
  } while (n < 0 && errno == EINTR);
  int err = errno;
  if (n != static_cast<ssize_t>(line.size())) {
    ::close(fd);
    throw IoError("cannot append to " + file.string() + ": " + (n < 0 ? std::strerror(err) : "short write"));
  }
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "tool-error";
}

std::optional<EventKind> event_kind_from_string(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::string iso_week_label(std::int64_t timestamp) {
  return utc_format(timestamp, "%G-W%V");
}

std::string format_event(const UsageEvent& event) {
  return std::to_string(kLogSchemaVersion) + "\t" + std::to_string(event.timestamp) + "\t" +
         std::string(to_string(event.kind)) + "\t" + event.user_hash + "\t" + std::to_string(event.source_bytes) +
         "\t" + event.week + "\n";
}

std::optional<UsageEvent> parse_event(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (fields.size() != 6 || fields[0] != std::to_string(kLogSchemaVersion)) return std::nullopt;
  auto ts = to_int(fields[1]);
  auto kind = event_kind_from_string(fields[2]);
  auto bytes = to_int(fields[4]);
  if (!ts || !kind || !bytes || !is_hex16(fields[3]) || fields[5].empty()) return std::nullopt;
  return UsageEvent{*ts, *kind, std::string(fields[3]), *bytes, std::string(fields[5])};
}

std::string hash_user(std::string_view salt, std::string_view user_name) {
  return keyed_digest_hex(salt, user_name, 16);
}

std::string scrub_text(std::string_view text, const AnonymizeOptions& options, bool label_names) {
  static const std::regex email(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})");
  std::string out(text);
  out = replace_bounded(out, email);
  if (!options.student_id_pattern.empty()) {
    std::regex id(options.student_id_pattern);
    out = replace_bounded(out, id);
  }
  out = replace_known(out, options.known_identifiers);
  if (label_names) out = replace_label_names(out);
  return out;
}

AnonymizedSource anonymize(std::string_view source, std::string_view file_name, const AnonymizeOptions& options) {
  enum class State { Code, LineComment, BlockComment, String, Char };
  AnonymizedSource result;
  result.file_name = scrub_text(file_name, options, false);
  std::string& out = result.text;
  out.reserve(source.size());

  State state = State::Code;
  std::size_t comment_start = 0;
  auto flush_comment = [&](std::size_t end) {
    out += scrub_text(source.substr(comment_start, end - comment_start), options, true);
  };
  for (std::size_t i = 0; i < source.size(); ++i) {
    char c = source[i];
    char next = i + 1 < source.size() ? source[i + 1] : '\0';
    switch (state) {
      case State::Code:
        out.push_back(c);
        if (c == '/' && next == '/') {
          out.push_back(next);
          ++i;
          state = State::LineComment;
          comment_start = i + 1;
        } else if (c == '/' && next == '*') {
          out.push_back(next);
          ++i;
          state = State::BlockComment;
          comment_start = i + 1;
        } else if (c == '"') {
          state = State::String;
        } else if (c == '\'') {
          state = State::Char;
        }
        break;
      case State::LineComment:
        if (c == '\n' && !(i > 0 && source[i - 1] == '\\')) {
          flush_comment(i);
          out.push_back(c);
          state = State::Code;
        }
        break;
      case State::BlockComment:
        if (c == '*' && next == '/') {
          flush_comment(i);
          out += "*/";
          ++i;
          state = State::Code;
        }
        break;
      case State::String:
      case State::Char:
        out.push_back(c);
        if (c == '\\' && i + 1 < source.size()) {
          out.push_back(next);
          ++i;
        } else if ((state == State::String && c == '"') || (state == State::Char && c == '\'') || c == '\n') {
          state = State::Code;
        }
        break;
    }
  }
  if (state == State::LineComment || state == State::BlockComment) flush_comment(source.size());
  return result;
}

fs::path EventLog::file_for(std::int64_t timestamp) const {
  return directory_ / ("usage-" + utc_format(timestamp, "%Y-%m-%d") + ".log");
}

void EventLog::append(const UsageEvent& event) const {
  std::error_code ec;
  fs::create_directories(directory_, ec);
  if (ec) throw IoError("cannot create " + directory_.string() + ": " + ec.message());
  write_line_atomically(file_for(event.timestamp), format_event(event));
}

void EventLog::append_quietly(const UsageEvent& event, const std::function<void(const std::string&)>& warn) const {
  try {
    append(event);
  } catch (const std::exception& e) {
    if (warn) warn(std::string("usage log: ") + e.what());
  }
}

std::vector<UsageEvent> EventLog::read_all(std::string_view from_day, std::string_view to_day) const {
  static const std::regex name(R"(^usage-([0-9]{4}-[0-9]{2}-[0-9]{2})\.log$)");
  std::vector<UsageEvent> events;
  std::error_code ec;
  if (!fs::is_directory(directory_, ec)) return events;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory_, ec)) {
    std::string file = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(file, m, name)) continue;
    std::string day = m[1].str();
    if (!from_day.empty() && day < from_day) continue;
    if (!to_day.empty() && day > to_day) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      if (auto event = parse_event(line)) events.push_back(std::move(*event));
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const UsageEvent& a, const UsageEvent& b) { return a.timestamp < b.timestamp; });
  return events;
}

void write_help_record(const fs::path& log_directory, const HelpRecord& record) {
  fs::path dir = log_directory / "help";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json j = {
      {"version", kLogSchemaVersion},
      {"timestamp", record.timestamp},
      {"user", record.user_hash},
      {"phase", record.phase},
      {"file", record.file_name},
      {"source", record.source},
      {"error_line", record.error_line ? nlohmann::json(*record.error_line) : nlohmann::json(nullptr)},
      {"compiler_message", record.compiler_message},
      {"response", record.response},
  };
  std::random_device rd;
  fs::path file = dir / (std::to_string(record.timestamp) + "-" + record.user_hash + "-" +
                         std::to_string(rd() % 1000000) + ".json");
  fs::path temp = file;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + temp.string());
    out << j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
    if (!out) throw IoError("cannot write " + temp.string());
  }
  fs::rename(temp, file, ec);
  if (ec) throw IoError("cannot write " + file.string() + ": " + ec.message());
}

}  // namespace ccoach
