#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ccoach/config.hpp"
#include "ccoach/diagnostics.hpp"

namespace ccoach {

/// The configured compiler, else gcc, else clang on PATH.
/// Throws CompilerNotFound.
std::filesystem::path resolve_compiler(const ToolConfig& config);

/// Flags added ahead of the student's own: debug info, warnings, sanitizers
/// (omitted for the valgrind tier), and plain diagnostics.
std::vector<std::string> injected_flags(const ToolConfig& config);

/// Passthrough flags that stop before linking (-c, -S, -E).
bool produces_executable(const std::vector<std::string>& passthrough);

/// Compiles `sources` to `out`, capturing diagnostics. Does not wrap the
/// binary; see instrument_build.
/// Throws SourceMissing, CompilerNotFound.
CompileOutcome invoke_compiler(const std::vector<std::filesystem::path>& sources,
                               const std::filesystem::path& out,
                               const std::vector<std::string>& passthrough, const ToolConfig& config);

}  // namespace ccoach
