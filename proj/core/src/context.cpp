#include "ccoach/context.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ccoach/errors.hpp"

namespace ccoach {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kMagic{"CCOACHCTX\0", 10};
constexpr unsigned char kVersion = 0x01;

void put_u64_be(std::string& out, std::uint64_t value) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<char>((value >> shift) & 0xff));
  }
}

std::uint64_t get_u64_be(std::string_view bytes, std::size_t& pos) {
  if (bytes.size() - pos < 8) throw CorruptStore("context file truncated");
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i) {
    value = (value << 8) | static_cast<unsigned char>(bytes[pos + i]);
  }
  pos += 8;
  return value;
}

json optional_json(const auto& value, auto&& convert) {
  return value ? convert(*value) : json(nullptr);
}

json to_json(const Diagnostic& d) {
  return {{"file", d.file},
          {"line", d.line},
          {"column", d.column ? json(*d.column) : json(nullptr)},
          {"severity", to_string(d.severity)},
          {"message", d.message},
          {"raw", d.raw_text}};
}

Diagnostic diagnostic_from_json(const json& j) {
  Diagnostic d;
  d.file = j.at("file").get<std::string>();
  d.line = j.at("line").get<int>();
  if (!j.at("column").is_null()) d.column = j.at("column").get<int>();
  auto severity = j.at("severity").get<std::string>();
  d.severity = severity == "warning" ? Severity::Warning : severity == "note" ? Severity::Note : Severity::Error;
  d.message = j.at("message").get<std::string>();
  d.raw_text = j.at("raw").get<std::string>();
  return d;
}

json to_json(const RuntimeCause& cause) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SignalCause>) {
          return {{"type", "signal"}, {"name", c.name}};
        } else if constexpr (std::is_same_v<T, SanitizerCause>) {
          return {{"type", "sanitizer"}, {"kind", to_string(c.kind)}, {"detail", c.detail}};
        } else {
          return {{"type", "shim"}, {"signal", c.signal_number}};
        }
      },
      cause);
}

RuntimeCause cause_from_json(const json& j) {
  auto type = j.at("type").get<std::string>();
  if (type == "signal") return SignalCause{j.at("name").get<std::string>()};
  if (type == "shim") return ShimCrashCause{j.at("signal").get<int>()};
  auto kind = sanitizer_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw CorruptStore("unknown sanitizer kind in context");
  return SanitizerCause{*kind, j.at("detail").get<std::string>()};
}

json to_json(const RuntimeReport& r) {
  return {{"cause", to_json(r.cause)},
          {"error_file", r.error_file},
          {"error_line", r.error_line ? json(*r.error_line) : json(nullptr)},
          {"function", r.function_name ? json(*r.function_name) : json(nullptr)},
          {"raw", r.raw_report}};
}

RuntimeReport report_from_json(const json& j) {
  RuntimeReport r;
  r.cause = cause_from_json(j.at("cause"));
  r.error_file = j.at("error_file").get<std::string>();
  if (!j.at("error_line").is_null()) r.error_line = j.at("error_line").get<int>();
  if (!j.at("function").is_null()) r.function_name = j.at("function").get<std::string>();
  r.raw_report = j.at("raw").get<std::string>();
  return r;
}

json to_json(const LocalsSnapshot& locals) {
  json frames = json::array();
  for (const auto& frame : locals.frames) {
    json vars = json::array();
    for (const auto& v : frame.variables) {
      vars.push_back({{"name", v.name}, {"value", v.rendered_value}, {"uninitialized", v.is_uninitialized}});
    }
    frames.push_back({{"function", frame.function_name}, {"variables", std::move(vars)}});
  }
  return {{"frames", std::move(frames)}};
}

LocalsSnapshot locals_from_json(const json& j) {
  LocalsSnapshot locals;
  for (const auto& f : j.at("frames")) {
    StackFrame frame;
    frame.function_name = f.at("function").get<std::string>();
    for (const auto& v : f.at("variables")) {
      frame.variables.push_back({v.at("name").get<std::string>(), v.at("value").get<std::string>(),
                                 v.at("uninitialized").get<bool>()});
    }
    locals.frames.push_back(std::move(frame));
  }
  return locals;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_all(int fd, std::string_view data, const fs::path& file) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("write " + file.string() + ": " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

std::string_view to_string(Phase phase) {
  return phase == Phase::CompileTime ? "compile-time" : "run-time";
}

const SourceFile* ErrorContext::find_source(std::string_view path) const {
  for (const auto& source : sources) {
    if (source.path == path) return &source;
  }
  for (const auto& source : sources) {
    if (fs::path(source.path).filename() == fs::path(path).filename()) return &source;
  }
  return nullptr;
}

void validate(const ErrorContext& ctx) {
  if (ctx.sources.empty()) {
    throw InvariantViolation("error context has no source files");
  }
  if (ctx.phase == Phase::CompileTime && (ctx.runtime_report || ctx.locals)) {
    throw InvariantViolation("compile-time context cannot carry a runtime report or locals");
  }
  if (ctx.phase == Phase::RunTime && !ctx.runtime_report) {
    throw InvariantViolation("run-time context needs a runtime report");
  }
  if (ctx.error_line && *ctx.error_line < 1) {
    throw InvariantViolation("error line must be >= 1");
  }
}

std::string serialize(const ErrorContext& ctx) {
  json sources = json::array();
  for (const auto& s : ctx.sources) sources.push_back(s.path);
  json diagnostics = json::array();
  for (const auto& d : ctx.diagnostics) diagnostics.push_back(to_json(d));

  json meta = {
      {"phase", ctx.phase == Phase::CompileTime ? "compile" : "runtime"},
      {"timestamp", ctx.timestamp},
      {"sources", std::move(sources)},
      {"diagnostics", std::move(diagnostics)},
      {"primary", optional_json(ctx.primary_diagnostic, [](const auto& d) { return to_json(d); })},
      {"enhanced", optional_json(ctx.enhanced_message, [](const auto& s) { return json(s); })},
      {"runtime_report", optional_json(ctx.runtime_report, [](const auto& r) { return to_json(r); })},
      {"locals", optional_json(ctx.locals, [](const auto& l) { return to_json(l); })},
      {"binary_hash", ctx.binary_hash},
      {"error_file", ctx.error_file},
      {"error_line", ctx.error_line ? json(*ctx.error_line) : json(nullptr)},
  };
  std::string metadata = meta.dump(-1, ' ', false, json::error_handler_t::replace);

  std::string out(kMagic);
  out.push_back(static_cast<char>(kVersion));
  put_u64_be(out, metadata.size());
  out += metadata;
  for (const auto& s : ctx.sources) {
    put_u64_be(out, s.text.size());
    out += s.text;
  }
  return out;
}

ErrorContext deserialize(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 1 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw CorruptStore("not a context file (bad magic)");
  }
  if (static_cast<unsigned char>(bytes[kMagic.size()]) != kVersion) {
    throw CorruptStore("unsupported context file version");
  }
  std::size_t pos = kMagic.size() + 1;
  std::uint64_t meta_size = get_u64_be(bytes, pos);
  if (bytes.size() - pos < meta_size) throw CorruptStore("context metadata truncated");
  json meta;
  try {
    meta = json::parse(bytes.substr(pos, meta_size));
  } catch (const json::exception& e) {
    throw CorruptStore(std::string("context metadata unreadable: ") + e.what());
  }
  pos += meta_size;

  ErrorContext ctx;
  try {
    ctx.phase = meta.at("phase").get<std::string>() == "runtime" ? Phase::RunTime : Phase::CompileTime;
    ctx.timestamp = meta.at("timestamp").get<std::int64_t>();
    for (const auto& path : meta.at("sources")) {
      std::uint64_t size = get_u64_be(bytes, pos);
      if (bytes.size() - pos < size) throw CorruptStore("source section truncated");
      ctx.sources.push_back({path.get<std::string>(), std::string(bytes.substr(pos, size))});
      pos += size;
    }
    for (const auto& d : meta.at("diagnostics")) ctx.diagnostics.push_back(diagnostic_from_json(d));
    if (!meta.at("primary").is_null()) ctx.primary_diagnostic = diagnostic_from_json(meta.at("primary"));
    if (!meta.at("enhanced").is_null()) ctx.enhanced_message = meta.at("enhanced").get<std::string>();
    if (!meta.at("runtime_report").is_null()) ctx.runtime_report = report_from_json(meta.at("runtime_report"));
    if (!meta.at("locals").is_null()) ctx.locals = locals_from_json(meta.at("locals"));
    ctx.binary_hash = meta.at("binary_hash").get<std::string>();
    ctx.error_file = meta.at("error_file").get<std::string>();
    if (!meta.at("error_line").is_null()) ctx.error_line = meta.at("error_line").get<int>();
  } catch (const json::exception& e) {
    throw CorruptStore(std::string("context metadata malformed: ") + e.what());
  }
  if (pos != bytes.size()) throw CorruptStore("trailing bytes after context");
  return ctx;
}

std::int64_t system_clock_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

ContextStore::ContextStore(fs::path directory, Clock clock, std::int64_t expiry_seconds)
    : directory_(std::move(directory)), clock_(std::move(clock)), expiry_seconds_(expiry_seconds) {}

void ContextStore::save(const ErrorContext& ctx) const {
  validate(ctx);
  std::string bytes = serialize(ctx);

  std::error_code ec;
  fs::create_directories(directory_, ec);
  if (ec) throw IoError("cannot create " + directory_.string() + ": " + ec.message());

  static std::atomic<unsigned> counter{0};
  fs::path temp = directory_ / (std::string(kFileName) + ".tmp." + std::to_string(::getpid()) + "." +
                                std::to_string(counter++));
  int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
  if (fd < 0) throw IoError("cannot write " + temp.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, bytes, temp);
    if (::fsync(fd) != 0) throw IoError("fsync " + temp.string() + ": " + std::strerror(errno));
  } catch (...) {
    ::close(fd);
    fs::remove(temp, ec);
    throw;
  }
  ::close(fd);

  try {
    if (before_rename) before_rename(temp);
  } catch (...) {
    fs::remove(temp, ec);
    throw;
  }
  if (::rename(temp.c_str(), file().c_str()) != 0) {
    int err = errno;
    fs::remove(temp, ec);
    throw IoError("cannot replace " + file().string() + ": " + std::strerror(err));
  }
}

std::optional<ErrorContext> ContextStore::load() const {
  std::error_code ec;
  if (!fs::exists(file(), ec)) return std::nullopt;
  try {
    ErrorContext ctx = deserialize(read_file(file()));
    if (clock_() - ctx.timestamp > expiry_seconds_) return std::nullopt;
    return ctx;
  } catch (const CorruptStore& e) {
    if (on_warning) on_warning("ignoring unreadable error context " + file().string() + ": " + e.what());
    return std::nullopt;
  } catch (const IoError& e) {
    if (on_warning) on_warning(e.what());
    return std::nullopt;
  }
}

fs::path workspace_store_dir(const fs::path& output_dir) {
  return (output_dir.empty() ? fs::path(".") : output_dir) / ".ccoach";
}

std::optional<ErrorContext> load_last_context(const fs::path& cwd, const fs::path& user_store_dir,
                                              const Clock& clock, std::int64_t expiry_seconds,
                                              const std::function<void(const std::string&)>& warn) {
  std::optional<ErrorContext> newest;
  for (const fs::path& dir : {workspace_store_dir(cwd), user_store_dir}) {
    if (dir.empty()) continue;
    ContextStore store(dir, clock, expiry_seconds);
    store.on_warning = warn;
    auto ctx = store.load();
    if (ctx && (!newest || ctx->timestamp > newest->timestamp)) newest = std::move(ctx);
  }
  return newest;
}

fs::path save_context(const ErrorContext& ctx, const fs::path& output_dir, const fs::path& user_store_dir) {
  fs::path used;
  try {
    ContextStore(workspace_store_dir(output_dir)).save(ctx);
    used = workspace_store_dir(output_dir);
  } catch (const IoError&) {
    if (user_store_dir.empty()) throw;
  }
  if (!user_store_dir.empty()) {
    try {
      ContextStore(user_store_dir).save(ctx);
      if (used.empty()) used = user_store_dir;
    } catch (const IoError&) {
      if (used.empty()) throw;
    }
  }
  return used;
}

}  // namespace ccoach
