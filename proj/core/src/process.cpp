#include "ccoach/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <set>

#include "ccoach/errors.hpp"

extern char** environ;

namespace ccoach {
namespace {

struct Pipe {
  int read_end = -1;
  int write_end = -1;

  void open() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) {
      throw IoError(std::string("pipe: ") + std::strerror(errno));
    }
    read_end = fds[0];
    write_end = fds[1];
  }
  void close_read() {
    if (read_end >= 0) ::close(read_end);
    read_end = -1;
  }
  void close_write() {
    if (write_end >= 0) ::close(write_end);
    write_end = -1;
  }
  ~Pipe() {
    close_read();
    close_write();
  }
};

std::vector<std::string> build_environment(const std::map<std::string, std::string>& overrides) {
  std::vector<std::string> env;
  std::set<std::string> replaced;
  for (char** entry = environ; entry && *entry; ++entry) {
    std::string_view var(*entry);
    auto eq = var.find('=');
    std::string name(var.substr(0, eq));
    if (overrides.contains(name)) {
      continue;
    }
    env.emplace_back(var);
  }
  for (const auto& [name, value] : overrides) {
    env.push_back(name + "=" + value);
  }
  return env;
}

std::vector<char*> c_strings(std::vector<std::string>& strings) {
  std::vector<char*> pointers;
  pointers.reserve(strings.size() + 1);
  for (auto& s : strings) pointers.push_back(s.data());
  pointers.push_back(nullptr);
  return pointers;
}

}  // namespace

ProcessResult run_process(const ProcessOptions& options) {
  if (options.argv.empty()) {
    throw IoError("run_process: empty argv");
  }
  Pipe out_pipe;
  Pipe err_pipe;
  Pipe exec_status;  // reports exec failure from the child
  if (options.capture_stdout) out_pipe.open();
  if (options.capture_stderr || options.on_stderr) err_pipe.open();
  exec_status.open();

  std::vector<std::string> argv_copy = options.argv;
  std::vector<std::string> env_copy = build_environment(options.env_overrides);
  auto argv_ptrs = c_strings(argv_copy);
  auto env_ptrs = c_strings(env_copy);

  const std::string workdir = options.working_directory.string();
  pid_t pid = ::fork();
  if (pid < 0) {
    throw IoError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::signal(SIGINT, SIG_DFL);
    ::signal(SIGQUIT, SIG_DFL);
    ::signal(SIGPIPE, SIG_DFL);
    if (options.stdin_fd) {
      ::dup2(*options.stdin_fd, STDIN_FILENO);
    } else if (options.stdin_mode == StdinMode::Null) {
      int null_fd = ::open("/dev/null", O_RDONLY);
      if (null_fd >= 0) ::dup2(null_fd, STDIN_FILENO);
    }
    if (out_pipe.write_end >= 0) ::dup2(out_pipe.write_end, STDOUT_FILENO);
    if (err_pipe.write_end >= 0) ::dup2(err_pipe.write_end, STDERR_FILENO);
    if (!workdir.empty() && ::chdir(workdir.c_str()) != 0) {
      int code = errno;
      [[maybe_unused]] auto written = ::write(exec_status.write_end, &code, sizeof code);
      ::_exit(127);
    }
    ::execvpe(argv_ptrs[0], argv_ptrs.data(), env_ptrs.data());
    int code = errno;
    [[maybe_unused]] auto written = ::write(exec_status.write_end, &code, sizeof code);
    ::_exit(127);
  }

  out_pipe.close_write();
  err_pipe.close_write();
  exec_status.close_write();

  int exec_errno = 0;
  if (::read(exec_status.read_end, &exec_errno, sizeof exec_errno) == sizeof exec_errno) {
    ::waitpid(pid, nullptr, 0);
    throw IoError("cannot run " + options.argv[0] + ": " + std::strerror(exec_errno));
  }

  ProcessResult result;
  std::array<char, 8192> buffer{};
  auto deadline = options.timeout
                      ? std::optional(std::chrono::steady_clock::now() + *options.timeout)
                      : std::nullopt;

  while (out_pipe.read_end >= 0 || err_pipe.read_end >= 0) {
    std::vector<pollfd> fds;
    if (out_pipe.read_end >= 0) fds.push_back({out_pipe.read_end, POLLIN, 0});
    if (err_pipe.read_end >= 0) fds.push_back({err_pipe.read_end, POLLIN, 0});
    int wait_ms = -1;
    if (deadline) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*deadline -
                                                                        std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        ::kill(pid, SIGKILL);
        result.timed_out = true;
        break;
      }
      wait_ms = static_cast<int>(left.count());
    }
    int ready = ::poll(fds.data(), fds.size(), wait_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (const auto& fd : fds) {
      if (!(fd.revents & (POLLIN | POLLHUP | POLLERR))) continue;
      ssize_t n = ::read(fd.fd, buffer.data(), buffer.size());
      bool is_out = fd.fd == out_pipe.read_end;
      if (n <= 0) {
        if (n < 0 && errno == EINTR) continue;
        is_out ? out_pipe.close_read() : err_pipe.close_read();
        continue;
      }
      std::string_view chunk(buffer.data(), static_cast<std::size_t>(n));
      if (is_out) {
        result.out.append(chunk);
      } else {
        if (options.capture_stderr) result.err.append(chunk);
        if (options.on_stderr) options.on_stderr(chunk);
      }
    }
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw IoError(std::string("waitpid: ") + std::strerror(errno));
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.term_signal = WTERMSIG(status);
  }
  return result;
}

std::optional<std::filesystem::path> find_executable(std::string_view name) {
  namespace fs = std::filesystem;
  if (name.empty()) return std::nullopt;
  auto is_exec = [](const fs::path& p) {
    std::error_code ec;
    return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
  };
  if (name.find('/') != std::string_view::npos) {
    fs::path p(name);
    return is_exec(p) ? std::optional(p) : std::nullopt;
  }
  const char* path = std::getenv("PATH");
  std::string_view dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
  while (!dirs.empty()) {
    auto colon = dirs.find(':');
    std::string_view dir = dirs.substr(0, colon);
    fs::path candidate = fs::path(dir.empty() ? "." : std::string(dir)) / std::string(name);
    if (is_exec(candidate)) return candidate;
    if (colon == std::string_view::npos) break;
    dirs.remove_prefix(colon + 1);
  }
  return std::nullopt;
}

std::string signal_name(int signal_number) {
  switch (signal_number) {
    case SIGSEGV: return "SIGSEGV";
    case SIGFPE: return "SIGFPE";
    case SIGABRT: return "SIGABRT";
    case SIGBUS: return "SIGBUS";
    case SIGILL: return "SIGILL";
    case SIGKILL: return "SIGKILL";
    case SIGTERM: return "SIGTERM";
    case SIGINT: return "SIGINT";
    case SIGPIPE: return "SIGPIPE";
    case SIGTRAP: return "SIGTRAP";
    default: return "SIG" + std::to_string(signal_number);
  }
}

}  // namespace ccoach
