#include <fcntl.h>
#include <poll.h>
#include <sys/stat.h>
#include <sys/sysmacros.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "ccoach/errors.hpp"
#include "ccoach/hashing.hpp"
#include "ccoach/process.hpp"
#include "ccoach/supervisor.hpp"

namespace ccoach {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kCaptureScript = R"py(
import gdb

POISON = 0xbe
MAX_ELEMS = 100

def _poisoned(v):
    try:
        if v.address is None or v.type.sizeof == 0:
            return False
        data = bytes(gdb.selected_inferior().read_memory(v.address, v.type.sizeof))
        return all(b == POISON for b in data)
    except gdb.error:
        return False

def render(v):
    try:
        if v.is_optimized_out:
            return "<optimized out>", False
        t = v.type.strip_typedefs()
        if POISONING and _poisoned(v):
            return "<uninitialized value>", True
        if t.code == gdb.TYPE_CODE_ARRAY:
            lo, hi = t.range()
            elem = t.target().strip_typedefs()
            if elem.code == gdb.TYPE_CODE_INT and elem.sizeof == 1:
                return str(v), False
            parts = [render(v[i])[0] for i in range(lo, min(hi, lo + MAX_ELEMS - 1) + 1)]
            if hi - lo + 1 > MAX_ELEMS:
                parts.append("...")
            return "{" + ",".join(parts) + "}", False
        if t.code in (gdb.TYPE_CODE_STRUCT, gdb.TYPE_CODE_UNION):
            parts = []
            for f in t.fields():
                if f.name:
                    parts.append(".%s = %s" % (f.name, render(v[f.name])[0]))
            return "{" + ", ".join(parts) + "}", False
        return str(v).replace("\n", " "), False
    except gdb.error:
        return "<unavailable>", False

def _symbols(frame):
    seen = set()
    out = []
    block = frame.block()
    while block is not None:
        for sym in block:
            if (sym.is_variable or sym.is_argument) and sym.name not in seen:
                seen.add(sym.name)
                out.append(sym)
        if block.function is not None:
            break
        block = block.superblock
    return out

class Poison(gdb.Breakpoint):
    def stop(self):
        frame = gdb.selected_frame()
        inf = gdb.selected_inferior()
        for sym in _symbols(frame):
            if sym.is_argument or sym.addr_class == gdb.SYMBOL_LOC_STATIC:
                continue
            try:
                v = sym.value(frame)
                if v.address is not None:
                    inf.write_memory(v.address, bytes([POISON]) * v.type.sizeof)
            except gdb.error:
                pass
        return False

def dump():
    try:
        frame = gdb.newest_frame()
    except gdb.error:
        print("@@NOSTOP")
        return
    if TARGET_FUNC:
        while frame is not None and frame.name() != TARGET_FUNC:
            frame = frame.older()
    if frame is None:
        print("@@NOFRAME")
        return
    frame.select()
    print("@@FRAME\t%s" % frame.name())
    names = set()
    for sym in _symbols(frame):
        try:
            text, uninit = render(sym.value(frame))
        except gdb.error:
            continue
        names.add(sym.name)
        print("@@VAR\t%s\t%d\t%s" % (sym.name, 1 if uninit else 0, text))
    for e in EXPRS:
        if e in names:
            continue
        try:
            text, uninit = render(gdb.parse_and_eval(e))
        except gdb.error:
            continue
        print("@@VAR\t%s\t%d\t%s" % (e, 1 if uninit else 0, text))
    print("@@END")
)py";

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& file, std::string_view data, fs::perms perms) {
  fs::path temp = file;
  temp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + temp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("cannot write " + temp.string());
  }
  std::error_code ec;
  fs::permissions(temp, perms, ec);
  fs::rename(temp, file, ec);
  if (ec) {
    fs::remove(temp);
    throw IoError("cannot replace " + file.string() + ": " + ec.message());
  }
}

std::string shell_quote(std::string_view text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out += "'";
  return out;
}

std::string python_quote(std::string_view text) {
  std::string out = "\"";
  for (unsigned char c : text) {
    if (c == '\\' || c == '"') {
      out.push_back('\\');
      out.push_back(static_cast<char>(c));
    } else if (c < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\x%02x", c);
      out += buf;
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  out += "\"";
  return out;
}

std::optional<fs::path> find_symbolizer() {
  for (const char* name : {"llvm-symbolizer", "llvm-symbolizer-18", "llvm-symbolizer-17", "llvm-symbolizer-16",
                           "llvm-symbolizer-15", "llvm-symbolizer-14"}) {
    if (auto p = find_executable(name)) return p;
  }
  return std::nullopt;
}

bool is_fault_signal(int sig) {
  return sig == SIGSEGV || sig == SIGFPE || sig == SIGBUS || sig == SIGILL || sig == SIGABRT || sig == SIGTRAP;
}

/// Splits child stderr into lines, forwarding until a sanitizer report begins.
class StderrGate {
 public:
  StderrGate(std::function<void(std::string_view)> forward, bool show_reports)
      : forward_(std::move(forward)), show_reports_(show_reports) {}

  void feed(std::string_view data) {
    pending_ += data;
    std::size_t start = 0;
    for (;;) {
      std::size_t nl = pending_.find('\n', start);
      if (nl == std::string::npos) break;
      std::string_view line(pending_.data() + start, nl + 1 - start);
      if (!line_started_ && !suppressed_ && is_sentinel(line)) suppressed_ = true;
      emit(line);
      line_started_ = false;
      start = nl + 1;
    }
    pending_.erase(0, start);
    if (!pending_.empty() && !suppressed_ && (line_started_ || !could_be_sentinel(pending_))) {
      emit(pending_);
      pending_.clear();
      line_started_ = true;
    }
  }

  void finish() {
    if (!pending_.empty()) {
      if (!line_started_ && !suppressed_ && is_sentinel(pending_)) suppressed_ = true;
      emit(pending_);
      pending_.clear();
    }
  }

  static bool is_sentinel(std::string_view line) {
    static const std::regex pid_prefix(R"(^==[0-9]+==)");
    std::string s(line);
    if (std::regex_search(s, pid_prefix)) return true;
    if (line.starts_with("AddressSanitizer:DEADLYSIGNAL")) return true;
    if (line.starts_with("=================")) return true;
    return line.find(": runtime error: ") != std::string_view::npos;
  }

 private:
  static bool could_be_sentinel(std::string_view partial) {
    return partial.starts_with("=") || partial.starts_with("A") || partial.find(':') != std::string_view::npos;
  }

  void emit(std::string_view text) {
    if ((!suppressed_ || show_reports_) && forward_) forward_(text);
  }

  std::function<void(std::string_view)> forward_;
  bool show_reports_;
  bool suppressed_ = false;
  bool line_started_ = false;
  std::string pending_;
};

enum class StdinKind { Null, RegularFile, Relay };

StdinKind classify_stdin() {
  struct stat st {};
  if (::fstat(STDIN_FILENO, &st) != 0) return StdinKind::Null;
  if (S_ISREG(st.st_mode)) return StdinKind::RegularFile;
  if (S_ISCHR(st.st_mode)) {
    struct stat null_st {};
    if (::stat("/dev/null", &null_st) == 0 && st.st_rdev == null_st.st_rdev) return StdinKind::Null;
  }
  return StdinKind::Relay;
}

/// Copies our stdin into a pipe for the child and records whether any byte
/// went through.
class StdinRelay {
 public:
  StdinRelay() {
    if (::pipe2(data_, O_CLOEXEC) != 0 || ::pipe2(stop_, O_CLOEXEC) != 0) {
      throw IoError(std::string("pipe: ") + std::strerror(errno));
    }
    thread_ = std::thread([this] { loop(); });
  }
  StdinRelay(const StdinRelay&) = delete;
  StdinRelay& operator=(const StdinRelay&) = delete;

  ~StdinRelay() {
    stop();
    for (int fd : {data_[0], data_[1], stop_[0], stop_[1]}) {
      if (fd >= 0) ::close(fd);
    }
  }

  int child_fd() const { return data_[0]; }

  void stop() {
    if (thread_.joinable()) {
      char c = 0;
      [[maybe_unused]] auto n = ::write(stop_[1], &c, 1);
      thread_.join();
    }
  }

  bool consumed() const { return consumed_.load(); }

 private:
  void loop() {
    char buffer[4096];
    for (;;) {
      pollfd fds[2] = {{STDIN_FILENO, POLLIN, 0}, {stop_[0], POLLIN, 0}};
      int r = ::poll(fds, 2, -1);
      if (r < 0) {
        if (errno == EINTR) continue;
        break;
      }
      if (fds[1].revents) break;
      if (!fds[0].revents) continue;
      ssize_t n = ::read(STDIN_FILENO, buffer, sizeof buffer);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      if (!write_all(buffer, static_cast<std::size_t>(n))) break;
      consumed_ = true;
    }
    ::close(data_[1]);
    data_[1] = -1;
  }

  bool write_all(const char* data, std::size_t size) {
    while (size > 0) {
      ssize_t n = ::write(data_[1], data, size);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      data += n;
      size -= static_cast<std::size_t>(n);
    }
    return true;
  }

  int data_[2] = {-1, -1};
  int stop_[2] = {-1, -1};
  std::atomic<bool> consumed_{false};
  std::thread thread_;
};

void put_le(std::string& out, unsigned long long value, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

unsigned long long get_le(std::string_view bytes, std::size_t& pos, int size) {
  unsigned long long value = 0;
  for (int i = 0; i < size; ++i) {
    value |= static_cast<unsigned long long>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  }
  pos += size;
  return value;
}

std::string line_of(std::string_view text, int line_number) {
  int current = 1;
  std::size_t pos = 0;
  while (current < line_number) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) return {};
    pos = nl + 1;
    ++current;
  }
  std::size_t end = text.find('\n', pos);
  return std::string(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
}

}  // namespace

std::string render_locals(const LocalsSnapshot& locals) {
  std::string out;
  for (std::size_t i = 0; i < locals.frames.size(); ++i) {
    const auto& frame = locals.frames[i];
    if (i > 0) out += "\nIn " + frame.function_name + "():\n";
    for (const auto& v : frame.variables) {
      out += v.name + " = " + v.rendered_value + "\n";
    }
  }
  return out;
}

BuildSnapshot instrument_build(const fs::path& binary, const std::vector<fs::path>& sources,
                               const fs::path& self_executable) {
  std::error_code ec;
  fs::path absolute_binary = fs::absolute(binary, ec);
  if (ec) throw IoError("cannot resolve " + binary.string());
  fs::path real = absolute_binary;
  real += kRealSuffix;
  fs::rename(absolute_binary, real, ec);
  if (ec) throw IoError("cannot move " + binary.string() + ": " + ec.message());

  BuildSnapshot snapshot;
  snapshot.real_binary = real;
  snapshot.binary_hash = sha256_file_hex(real);

  ErrorContext ctx;
  ctx.binary_hash = snapshot.binary_hash;
  for (const auto& source : sources) {
    ctx.sources.push_back({source.string(), read_file(source)});
  }
  fs::path dir = workspace_store_dir(absolute_binary.parent_path()) / "snapshots";
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  snapshot.snapshot_file = dir / (snapshot.binary_hash + ".snap");
  write_file(snapshot.snapshot_file, serialize(ctx), fs::perms::owner_read | fs::perms::owner_write);

  std::string script = "#!/bin/sh\nexec " + shell_quote(fs::absolute(self_executable).string()) +
                       " --supervise --real " + shell_quote(real.string()) + " --snapshot " +
                       shell_quote(snapshot.snapshot_file.string()) + " -- \"$@\"\n";
  write_file(absolute_binary, script,
             fs::perms::owner_all | fs::perms::group_read | fs::perms::group_exec | fs::perms::others_read |
                 fs::perms::others_exec);
  return snapshot;
}

ErrorContext load_snapshot(const fs::path& snapshot_file) {
  return deserialize(read_file(snapshot_file));
}

std::map<std::string, std::string> sanitizer_environment(bool for_debugger) {
  std::map<std::string, std::string> env;
  if (for_debugger) {
    env["ASAN_OPTIONS"] = "abort_on_error=1:detect_leaks=0:color=never";
    env["UBSAN_OPTIONS"] = "halt_on_error=1:abort_on_error=1:print_stacktrace=0:color=never";
  } else {
    env["ASAN_OPTIONS"] = "detect_leaks=1:color=never";
    env["UBSAN_OPTIONS"] = "print_stacktrace=1:halt_on_error=1:color=never";
    env["LSAN_OPTIONS"] = "exitcode=0";
    if (auto symbolizer = find_symbolizer()) env["ASAN_SYMBOLIZER_PATH"] = symbolizer->string();
  }
  return env;
}

std::vector<std::string> indexed_expressions(std::string_view source_line) {
  static const std::regex re(R"([A-Za-z_][A-Za-z0-9_]*(?:\s*\[[^\[\]]+\])+)");
  std::vector<std::string> out;
  std::string line(source_line);
  for (auto it = std::sregex_iterator(line.begin(), line.end(), re); it != std::sregex_iterator(); ++it) {
    std::string expr;
    for (char c : it->str()) {
      if (c != ' ' && c != '\t') expr.push_back(c);
    }
    if (std::find(out.begin(), out.end(), expr) == out.end()) out.push_back(expr);
  }
  return out;
}

std::optional<LocalsSnapshot> parse_gdb_locals(std::string_view transcript) {
  LocalsSnapshot snapshot;
  bool in_frame = false;
  bool complete = false;
  std::istringstream in{std::string(transcript)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with("@@FRAME\t")) {
      snapshot.frames.push_back({line.substr(8), {}});
      in_frame = true;
    } else if (in_frame && line.starts_with("@@VAR\t")) {
      std::size_t a = line.find('\t', 6);
      if (a == std::string::npos) continue;
      std::size_t b = line.find('\t', a + 1);
      if (b == std::string::npos) continue;
      LocalVariable var;
      var.name = line.substr(6, a - 6);
      var.is_uninitialized = line.substr(a + 1, b - a - 1) == "1";
      var.rendered_value = line.substr(b + 1);
      snapshot.frames.back().variables.push_back(std::move(var));
    } else if (in_frame && line == "@@END") {
      complete = true;
      in_frame = false;
    }
  }
  if (!complete || snapshot.frames.empty()) return std::nullopt;
  return snapshot;
}

std::optional<LocalsSnapshot> capture_locals(const fs::path& binary, const RuntimeReport& report,
                                             const std::vector<std::string>& argv, const ToolConfig& config,
                                             std::string_view error_source_line) {
  auto debugger = find_executable(config.debugger.string());
  if (!debugger) return std::nullopt;

  bool breakpoint_mode = false;
  if (const auto* s = std::get_if<SanitizerCause>(&report.cause)) {
    breakpoint_mode = s->kind == SanitizerKind::Leak || s->kind == SanitizerKind::UseOfUninitialized;
  }
  if (breakpoint_mode && (report.error_file.empty() || !report.error_line)) return std::nullopt;
  if (!breakpoint_mode && !report.function_name) return std::nullopt;

  bool poisoning = config.uninit_tier == UninitTier::Valgrind;
  std::string script = "python\nPOISONING = " + std::string(poisoning ? "True" : "False") + "\n" +
           "TARGET_FUNC = " + (report.function_name ? python_quote(*report.function_name) : "None") + "\n" +
           "EXPRS = [";
  for (const auto& e : indexed_expressions(error_source_line)) script += python_quote(e) + ", ";
  script += "]\n";
  script += kCaptureScript;
  script += "\nend\nset pagination off\nset confirm off\nset width 0\nset print elements 200\n";
  if (poisoning && report.function_name) {
    script += "python Poison(" + python_quote(*report.function_name) + ", internal=True)\n";
  }
  if (breakpoint_mode) {
    script += "break " + report.error_file + ":" + std::to_string(*report.error_line) + "\n";
  }
  script += "run </dev/null >/dev/null 2>/dev/null\npython dump()\nkill\n";

  char temp_name[] = "/tmp/ccoach-gdb-XXXXXX";
  int fd = ::mkstemp(temp_name);
  if (fd < 0) return std::nullopt;
  fs::path script_file = temp_name;
  bool written = ::write(fd, script.data(), script.size()) == static_cast<ssize_t>(script.size());
  ::close(fd);
  if (!written) {
    fs::remove(script_file);
    return std::nullopt;
  }

  ProcessOptions options;
  options.argv = {debugger->string(), "-nx", "-batch", "-x", script_file.string(), "--args", binary.string()};
  options.argv.insert(options.argv.end(), argv.begin(), argv.end());
  options.env_overrides = sanitizer_environment(true);
  options.stdin_mode = StdinMode::Null;
  options.timeout = std::chrono::seconds(30);
  std::optional<LocalsSnapshot> locals;
  try {
    auto result = run_process(options);
    if (!result.timed_out) locals = parse_gdb_locals(result.out);
  } catch (const IoError&) {
  }
  std::error_code ec;
  fs::remove(script_file, ec);
  return locals;
}

std::optional<CrashRecord> parse_crash_record(std::string_view bytes) {
  if (bytes.size() != CrashRecord::kSize || bytes.substr(0, 4) != "CCRS" || bytes[4] != 0x01) {
    return std::nullopt;
  }
  std::size_t pos = 5;
  CrashRecord record;
  record.signal_number = static_cast<int>(static_cast<std::int32_t>(get_le(bytes, pos, 4)));
  record.fault_address = get_le(bytes, pos, 8);
  auto count = static_cast<std::uint32_t>(get_le(bytes, pos, 4));
  if (count > CrashRecord::kMaxFrames) return std::nullopt;
  for (std::size_t i = 0; i < CrashRecord::kMaxFrames; ++i) {
    auto frame = get_le(bytes, pos, 8);
    if (i < count) record.frame_addresses.push_back(frame);
  }
  record.pid = static_cast<int>(static_cast<std::int32_t>(get_le(bytes, pos, 4)));
  record.monotonic_timestamp = static_cast<long long>(get_le(bytes, pos, 8));
  return record;
}

std::string encode_crash_record(const CrashRecord& record) {
  if (record.frame_addresses.size() > CrashRecord::kMaxFrames) {
    throw InvariantViolation("crash record holds at most 64 frames");
  }
  std::string out = "CCRS";
  out.push_back(0x01);
  put_le(out, static_cast<std::uint32_t>(record.signal_number), 4);
  put_le(out, record.fault_address, 8);
  put_le(out, record.frame_addresses.size(), 4);
  for (std::size_t i = 0; i < CrashRecord::kMaxFrames; ++i) {
    put_le(out, i < record.frame_addresses.size() ? record.frame_addresses[i] : 0, 8);
  }
  put_le(out, static_cast<std::uint32_t>(record.pid), 4);
  put_le(out, static_cast<unsigned long long>(record.monotonic_timestamp), 8);
  return out;
}

RuntimeReport report_from_crash_record(const CrashRecord& record, const fs::path& binary,
                                       const std::vector<std::string>& sources, const Symbolizer& symbolize) {
  RuntimeReport report;
  report.cause = ShimCrashCause{record.signal_number};
  std::ostringstream raw;
  raw << "caught " << signal_name(record.signal_number) << " at address 0x" << std::hex << record.fault_address
      << "\n";
  for (std::size_t i = 0; i < record.frame_addresses.size(); ++i) {
    unsigned long long address = record.frame_addresses[i];
    raw << "    #" << std::dec << i << " 0x" << std::hex << address << "\n";
    if (!report.error_file.empty() || !symbolize) continue;
    auto frame = symbolize(binary.string(), i > 0 && address > 0 ? address - 1 : address);
    if (!frame) continue;
    if (auto source = match_source(frame->file, sources)) {
      report.error_file = *source;
      report.error_line = frame->line;
      if (!frame->function.empty()) report.function_name = frame->function;
    }
  }
  report.raw_report = raw.str();
  return report;
}

SuperviseResult supervise_run(const SuperviseRequest& request, const ToolConfig& config,
                              const SuperviseHooks& hooks, const Clock& clock) {
  std::optional<ErrorContext> snapshot;
  try {
    snapshot = load_snapshot(request.snapshot_file);
  } catch (const Error&) {
  }
  std::vector<std::string> source_paths;
  if (snapshot) {
    for (const auto& s : snapshot->sources) source_paths.push_back(s.path);
  }

  ProcessOptions options;
  if (config.uninit_tier == UninitTier::Valgrind) {
    auto valgrind = find_executable("valgrind");
    if (!valgrind) throw CompilerNotFound("valgrind is required for uninitialized-read checks");
    options.argv = {valgrind->string(),
                    "-q",
                    "--leak-check=full",
                    "--show-leak-kinds=definite",
                    "--errors-for-leak-kinds=definite",
                    request.real_binary.string()};
  } else {
    options.argv = {request.real_binary.string()};
  }
  options.argv.insert(options.argv.end(), request.argv.begin(), request.argv.end());
  options.env_overrides = sanitizer_environment(false);
  options.capture_stdout = false;
  options.capture_stderr = true;

  fs::path crash_file;
  if (!config.crash_shim.empty()) {
    crash_file = request.real_binary;
    crash_file += kCrashSuffix;
    std::error_code ec;
    fs::remove(crash_file, ec);
  }

  StderrGate gate(hooks.forward_stderr, config.show_sanitizer_report);
  options.on_stderr = [&gate](std::string_view data) { gate.feed(data); };

  SuperviseResult result;
  StdinKind stdin_kind = classify_stdin();
  std::optional<StdinRelay> relay;
  off_t start_offset = -1;
  if (stdin_kind == StdinKind::RegularFile) {
    start_offset = ::lseek(STDIN_FILENO, 0, SEEK_CUR);
  } else if (stdin_kind == StdinKind::Relay) {
    relay.emplace();
    options.stdin_fd = relay->child_fd();
  }

  ProcessResult run = run_process(options);
  gate.finish();
  if (relay) {
    relay->stop();
    result.stdin_consumed = relay->consumed();
  } else if (stdin_kind == StdinKind::RegularFile) {
    off_t end_offset = ::lseek(STDIN_FILENO, 0, SEEK_CUR);
    result.stdin_consumed = start_offset < 0 || end_offset != start_offset;
  }

  result.exit_status = run.shell_status();
  result.term_signal = run.term_signal;

  Symbolizer symbolize = addr2line_symbolizer();
  result.report = parse_sanitizer_report(run.err, source_paths, symbolize);
  if (!result.report && !crash_file.empty()) {
    std::error_code ec;
    if (fs::exists(crash_file, ec)) {
      try {
        if (auto record = parse_crash_record(read_file(crash_file))) {
          result.report = report_from_crash_record(*record, request.real_binary, source_paths, symbolize);
        }
      } catch (const IoError&) {
      }
    }
  }
  if (!crash_file.empty()) {
    std::error_code ec;
    fs::remove(crash_file, ec);
  }
  if (!result.report && run.term_signal && is_fault_signal(run.term_signal)) {
    RuntimeReport report;
    report.cause = SignalCause{signal_name(run.term_signal)};
    report.raw_report = "program terminated by " + signal_name(run.term_signal) + "\n";
    result.report = report;
  }
  if (!result.report || !snapshot || snapshot->sources.empty()) return result;

  ErrorContext ctx;
  ctx.phase = Phase::RunTime;
  ctx.timestamp = clock();
  ctx.sources = snapshot->sources;
  ctx.runtime_report = result.report;
  ctx.binary_hash = snapshot->binary_hash;
  ctx.error_file = result.report->error_file;
  ctx.error_line = result.report->error_line;
  if (config.capture_locals && !result.stdin_consumed) {
    std::string line_text;
    if (const auto* source = ctx.find_source(ctx.error_file); source && ctx.error_line) {
      line_text = line_of(source->text, *ctx.error_line);
    }
    ctx.locals = capture_locals(request.real_binary, *result.report, request.argv, config, line_text);
  }
  result.context = std::move(ctx);
  return result;
}

}  // namespace ccoach
