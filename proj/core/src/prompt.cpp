#include "ccoach/prompt.hpp"

#include <algorithm>

#include "ccoach/errors.hpp"

namespace ccoach {

namespace {

std::vector<std::string_view> split_keep_newlines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    end = end == std::string_view::npos ? text.size() : end + 1;
    lines.push_back(text.substr(start, end - start));
    start = end;
  }
  return lines;
}

std::string with_newline(std::string_view text) {
  std::string out(text);
  if (!out.empty() && out.back() != '\n') out.push_back('\n');
  return out;
}

int count_lines(std::string_view text) {
  return static_cast<int>(split_keep_newlines(text).size());
}

/// Cuts `text` so that it fits in `max_bytes`, ending with the marker when cut.
std::string cut_text(std::string_view text, std::size_t max_bytes) {
  if (text.size() <= max_bytes) return std::string(text);
  std::string marker = std::string(kOmittedMarker) + "\n";
  if (max_bytes < marker.size()) return {};
  std::string out(text.substr(0, max_bytes - marker.size()));
  std::size_t nl = out.rfind('\n');
  out.erase(nl == std::string::npos ? 0 : nl + 1);
  return out + marker;
}

struct Parts {
  std::string source;
  std::string explanation;
  std::string location;
  std::string values;
};

std::string assemble(const Parts& p) {
  std::string user = "This is my C program\n" + with_newline(p.source);
  user += "Help me understand this message from the C compiler:\n";
  user += with_newline(p.explanation);
  user += p.location;
  if (!p.values.empty()) user += "Values:\n" + with_newline(p.values);
  user += "Remember, you are tutor helping a student.\nDo not write code for the student.";
  return user;
}

}  // namespace

int estimate_tokens(std::string_view text) {
  return static_cast<int>((text.size() + 3) / 4);
}

std::string truncate_to_budget(std::string_view source, int error_line, int budget_tokens) {
  if (estimate_tokens(source) <= budget_tokens) return std::string(source);
  if (budget_tokens <= 0) return {};
  const std::size_t max_bytes = static_cast<std::size_t>(budget_tokens) * 4;
  const std::string marker = std::string(kOmittedMarker) + "\n";
  auto lines = split_keep_newlines(source);
  const int n = static_cast<int>(lines.size());
  int e = std::clamp(error_line, 1, std::max(n, 1)) - 1;

  auto cost = [&](int lo, int hi, std::size_t body) {
    return body + (lo > 0 ? marker.size() : 0) + (hi < n - 1 ? marker.size() : 0);
  };

  std::size_t body = lines[e].size();
  if (cost(e, e, body) > max_bytes) {
    std::size_t markers = cost(e, e, 0);
    if (markers >= max_bytes) return {};
    std::string line(lines[e].substr(0, max_bytes - markers - 1));
    line.push_back('\n');
    return (e > 0 ? marker : "") + line + (e < n - 1 ? marker : "");
  }
  int lo = e;
  int hi = e;
  bool down = true;
  bool down_open = true;
  bool up_open = true;
  while (down_open || up_open) {
    if (down && down_open) {
      if (hi + 1 < n && cost(lo, hi + 1, body + lines[hi + 1].size()) <= max_bytes) {
        ++hi;
        body += lines[hi].size();
      } else {
        down_open = false;
      }
    } else if (!down && up_open) {
      if (lo > 0 && cost(lo - 1, hi, body + lines[lo - 1].size()) <= max_bytes) {
        --lo;
        body += lines[lo].size();
      } else {
        up_open = false;
      }
    }
    down = !down;
  }
  std::string out;
  if (lo > 0) out += marker;
  for (int k = lo; k <= hi; ++k) out += lines[k];
  if (hi < n - 1) out += marker;
  return out;
}

std::string render_sources(const ErrorContext& ctx) {
  if (ctx.sources.size() == 1) return with_newline(ctx.sources.front().text);
  std::string out;
  for (const auto& source : ctx.sources) {
    out += "// File: " + source.path + "\n" + with_newline(source.text);
  }
  return out;
}

PromptBundle build_prompt(const ErrorContext& ctx, int token_budget) {
  Parts parts;
  if (ctx.enhanced_message && !ctx.enhanced_message->empty()) {
    parts.explanation = *ctx.enhanced_message;
  } else if (ctx.primary_diagnostic) {
    parts.explanation = ctx.primary_diagnostic->raw_text;
  } else if (ctx.runtime_report) {
    parts.explanation = ctx.runtime_report->raw_report;
  }
  while (!parts.explanation.empty() && parts.explanation.back() == '\n') parts.explanation.pop_back();
  if (parts.explanation.empty() || ctx.sources.empty()) throw EmptyContext();

  std::optional<int> line = ctx.error_line;
  if (!line && ctx.primary_diagnostic) line = ctx.primary_diagnostic->line;
  std::string file = ctx.error_file;
  if (file.empty() && ctx.primary_diagnostic) file = ctx.primary_diagnostic->file;
  if (line) {
    parts.location = "Error location: Line " + std::to_string(*line);
    if (ctx.sources.size() > 1 && !file.empty()) parts.location += " of " + file;
    parts.location += "\n";
  }
  if (ctx.phase == Phase::RunTime && ctx.locals) parts.values = render_locals(*ctx.locals);

  std::string full_source = render_sources(ctx);
  int source_line = line.value_or(1);
  if (ctx.sources.size() > 1) {
    int offset = 0;
    const SourceFile* target = file.empty() ? nullptr : ctx.find_source(file);
    for (const auto& s : ctx.sources) {
      offset += 1;
      if (&s == target) break;
      offset += count_lines(with_newline(s.text));
    }
    source_line = target ? offset + source_line : 1;
  }

  PromptBundle bundle;
  bundle.system_message = std::string(kSystemMessage);
  const int system_tokens = estimate_tokens(bundle.system_message);

  parts.source = full_source;
  auto total = [&](const Parts& p) { return system_tokens + estimate_tokens(assemble(p)); };
  if (total(parts) > token_budget) {
    bundle.truncated = true;
    int share = token_budget * 7 / 10;
    parts.source = truncate_to_budget(full_source, source_line, share);
    if (total(parts) > token_budget) {
      Parts without_source = parts;
      without_source.source.clear();
      int rest = total(without_source) - estimate_tokens("\n");
      int room = token_budget - rest;
      parts.source = room > 0 ? truncate_to_budget(full_source, source_line, room) : std::string();
      while (!parts.source.empty() && total(parts) > token_budget) {
        room -= std::max(1, total(parts) - token_budget);
        parts.source = room > 0 ? truncate_to_budget(full_source, source_line, room) : std::string();
      }
    }
    if (total(parts) > token_budget) {
      Parts fixed = parts;
      fixed.values.clear();
      fixed.explanation.clear();
      long room_bytes = static_cast<long>(token_budget - total(fixed)) * 4 - 8;
      std::size_t values_room = static_cast<std::size_t>(std::max(0L, room_bytes / 3));
      parts.values = cut_text(parts.values, values_room);
      std::size_t explanation_room =
          static_cast<std::size_t>(std::max(0L, room_bytes - static_cast<long>(parts.values.size())));
      parts.explanation = cut_text(parts.explanation, explanation_room);
    }
  }
  bundle.user_message = assemble(parts);
  if (system_tokens + estimate_tokens(bundle.user_message) > token_budget) {
    std::size_t room = static_cast<std::size_t>(std::max(0, token_budget - system_tokens)) * 4;
    bundle.user_message = bundle.user_message.substr(0, room);
    bundle.truncated = true;
  }
  bundle.estimated_tokens = system_tokens + estimate_tokens(bundle.user_message);
  return bundle;
}

std::string format_bundle(const PromptBundle& bundle) {
  return "system:content:\n" + bundle.system_message + "\n\nuser:content:\n" + bundle.user_message + "\n";
}

}  // namespace ccoach
