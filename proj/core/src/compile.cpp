#include "ccoach/compile.hpp"

#include <algorithm>

#include "ccoach/errors.hpp"
#include "ccoach/process.hpp"

namespace ccoach {

namespace fs = std::filesystem;

fs::path resolve_compiler(const ToolConfig& config) {
  if (!config.compiler_path.empty()) {
    if (auto found = find_executable(config.compiler_path.string())) return *found;
    throw CompilerNotFound("compiler not found: " + config.compiler_path.string());
  }
  for (std::string_view name : {"gcc", "clang"}) {
    if (auto found = find_executable(name)) return *found;
  }
  throw CompilerNotFound("no C compiler found on PATH (tried gcc, clang)");
}

std::vector<std::string> injected_flags(const ToolConfig& config) {
  // DWARF 4 keeps addr2line able to read clang's line tables.
  std::vector<std::string> flags = {"-g", "-gdwarf-4", "-fno-omit-frame-pointer", "-Wall", "-Wextra",
                                    "-fdiagnostics-color=never"};
  if (config.uninit_tier == UninitTier::Off) {
    flags.emplace_back("-fsanitize=address,undefined");
  }
  if (!config.crash_shim.empty()) {
    flags.emplace_back("-no-pie");
  }
  return flags;
}

bool produces_executable(const std::vector<std::string>& passthrough) {
  return std::none_of(passthrough.begin(), passthrough.end(),
                      [](const std::string& f) { return f == "-c" || f == "-S" || f == "-E"; });
}

CompileOutcome invoke_compiler(const std::vector<fs::path>& sources, const fs::path& out,
                               const std::vector<std::string>& passthrough, const ToolConfig& config) {
  if (sources.empty()) throw UsageError("no source files given");
  for (const auto& source : sources) {
    if (source.extension() != ".c") {
      throw UsageError("not a C source file: " + source.string());
    }
    std::error_code ec;
    if (!fs::is_regular_file(source, ec)) {
      throw SourceMissing(source.string() + ": no such file");
    }
  }
  fs::path compiler = resolve_compiler(config);

  ProcessOptions options;
  options.argv.push_back(compiler.string());
  for (auto& flag : injected_flags(config)) options.argv.push_back(std::move(flag));
  for (const auto& source : sources) options.argv.push_back(source.string());
  if (!config.crash_shim.empty()) options.argv.push_back(config.crash_shim.string());
  options.argv.push_back("-o");
  options.argv.push_back(out.string());
  options.argv.insert(options.argv.end(), passthrough.begin(), passthrough.end());
  options.stdin_mode = StdinMode::Null;

  ProcessResult run = run_process(options);

  CompileOutcome outcome;
  outcome.exit_status = run.shell_status();
  outcome.compiler_stdout = std::move(run.out);
  outcome.compiler_stderr = std::move(run.err);
  ParsedDiagnostics parsed = parse_diagnostics(outcome.compiler_stderr);
  outcome.diagnostics = std::move(parsed.diagnostics);
  outcome.unparsed_lines = std::move(parsed.unparsed);
  std::error_code ec;
  if (outcome.exit_status == 0 && fs::exists(out, ec)) {
    outcome.output_binary = out;
  }
  return outcome;
}

}  // namespace ccoach
