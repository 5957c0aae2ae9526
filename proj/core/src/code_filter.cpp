#include "ccoach/code_filter.hpp"

#include <optional>

namespace ccoach {

namespace {

struct Fence {
  char ch = 0;
  std::size_t length = 0;
  std::size_t rest = 0;  // offset just past the fence run
};

std::optional<Fence> fence_at(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] == ' ' && i < 4) ++i;
  if (i > 3 || i >= line.size()) return std::nullopt;
  char c = line[i];
  if (c != '`' && c != '~') return std::nullopt;
  std::size_t j = i;
  while (j < line.size() && line[j] == c) ++j;
  if (j - i < 3) return std::nullopt;
  return Fence{c, j - i, j};
}

std::string_view strip_eol(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  return line;
}

}  // namespace

bool CodeBlockFilter::may_open_fence(std::string_view partial) {
  std::size_t i = 0;
  while (i < partial.size() && partial[i] == ' ' && i < 4) ++i;
  if (i > 3) return false;
  return i == partial.size() || partial[i] == '`' || partial[i] == '~';
}

std::string CodeBlockFilter::process_line(std::string_view line) {
  std::string_view body = strip_eol(line);
  if (in_block_) {
    if (auto f = fence_at(body); f && f->ch == fence_char_ && f->length >= fence_len_ &&
                                 body.find_first_not_of(" \t", f->rest) == std::string_view::npos) {
      in_block_ = false;
    }
    return {};
  }
  if (auto f = fence_at(body)) {
    bool info_ok = f->ch != '`' || body.find('`', f->rest) == std::string_view::npos;
    if (info_ok) {
      in_block_ = true;
      fence_char_ = f->ch;
      fence_len_ = f->length;
      return std::string(kCodeOmitted) + "\n";
    }
  }
  return std::string(line);
}

std::string CodeBlockFilter::feed(std::string_view text) {
  std::string out;
  while (!text.empty()) {
    std::size_t nl = text.find('\n');
    std::string_view piece = nl == std::string_view::npos ? text : text.substr(0, nl + 1);
    text.remove_prefix(piece.size());
    bool complete = piece.back() == '\n';
    if (passthrough_) {
      out += piece;
      if (complete) passthrough_ = false;
      continue;
    }
    pending_ += piece;
    if (complete) {
      out += process_line(pending_);
      pending_.clear();
    } else if (!in_block_ && !may_open_fence(pending_)) {
      out += pending_;
      pending_.clear();
      passthrough_ = true;
    }
  }
  return out;
}

std::string CodeBlockFilter::finish() {
  std::string out;
  if (!pending_.empty()) {
    out = process_line(pending_);
    pending_.clear();
    if (!out.empty() && out.back() == '\n' && out.starts_with(kCodeOmitted)) out.pop_back();
  }
  passthrough_ = false;
  return out;
}

std::string strip_code_blocks(std::string_view text) {
  CodeBlockFilter filter;
  std::string out = filter.feed(text);
  out += filter.finish();
  return out;
}

}  // namespace ccoach
