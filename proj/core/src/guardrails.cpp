#include "ccoach/guardrails.hpp"

#include <fstream>
#include <sstream>
#include <unistd.h>

#include "ccoach/errors.hpp"

namespace ccoach {

namespace fs = std::filesystem;

GuardrailDecision check_guardrails(GuardrailState& state, std::int64_t now, const ToolConfig& config) {
  if (config.exam_mode) return Refuse{std::string(kExamModeRefusal)};
  if (!state.call_timestamps.empty()) now = std::max(now, state.call_timestamps.back());
  while (!state.call_timestamps.empty() &&
         now - state.call_timestamps.front() >= config.rate_limit_window_seconds) {
    state.call_timestamps.pop_front();
  }
  std::size_t calls = state.call_timestamps.size() + 1;
  state.call_timestamps.push_back(now);
  while (state.call_timestamps.size() > static_cast<std::size_t>(config.rate_limit_max_calls)) {
    state.call_timestamps.pop_front();
  }
  if (calls > static_cast<std::size_t>(config.rate_limit_max_calls)) {
    ++state.warnings_issued;
    return ProceedWithWarning{std::string(kSparingUseWarning)};
  }
  return Proceed{};
}

GuardrailState load_guardrail_state(const fs::path& file) {
  GuardrailState state;
  std::ifstream in(file);
  if (!in) return state;
  std::string tag;
  if (!(in >> tag) || tag != "ccoach-guardrail-v1") return state;
  if (!(in >> tag >> state.warnings_issued) || tag != "warnings") return {};
  std::int64_t ts = 0;
  while (in >> ts) {
    if (!state.call_timestamps.empty() && ts < state.call_timestamps.back()) return {};
    state.call_timestamps.push_back(ts);
  }
  return state;
}

void save_guardrail_state(const GuardrailState& state, const fs::path& file) {
  std::error_code ec;
  if (file.has_parent_path()) fs::create_directories(file.parent_path(), ec);
  fs::path temp = file;
  temp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(temp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + temp.string());
    out << "ccoach-guardrail-v1\nwarnings " << state.warnings_issued << "\n";
    for (auto ts : state.call_timestamps) out << ts << "\n";
    if (!out) throw IoError("cannot write " + temp.string());
  }
  fs::rename(temp, file, ec);
  if (ec) throw IoError("cannot replace " + file.string() + ": " + ec.message());
}

}  // namespace ccoach
