#include "ccoach/sse.hpp"

namespace ccoach {

void SseParser::feed(std::string_view bytes) {
  for (char c : bytes) {
    if (last_was_cr_) {
      last_was_cr_ = false;
      if (c == '\n') continue;
    }
    if (c == '\r' || c == '\n') {
      last_was_cr_ = c == '\r';
      std::string line = std::move(line_);
      line_.clear();
      process_line(line);
    } else {
      line_.push_back(c);
    }
  }
}

void SseParser::process_line(std::string_view line) {
  if (line.empty()) {
    dispatch();
    return;
  }
  if (line.front() == ':') return;
  std::string_view field = line;
  std::string_view value;
  if (auto colon = line.find(':'); colon != std::string_view::npos) {
    field = line.substr(0, colon);
    value = line.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
  }
  if (field == "data") {
    data_ += value;
    data_ += '\n';
    has_data_ = true;
  } else if (field == "event") {
    event_ = std::string(value);
  }
}

void SseParser::dispatch() {
  if (has_data_) {
    std::string data = std::move(data_);
    if (!data.empty() && data.back() == '\n') data.pop_back();
    std::string event = event_.empty() ? "message" : event_;
    data_.clear();
    event_.clear();
    has_data_ = false;
    on_event_(event, data);
    return;
  }
  data_.clear();
  event_.clear();
}

std::string encode_sse_event(std::string_view data) {
  std::string out;
  std::size_t start = 0;
  for (;;) {
    std::size_t nl = data.find('\n', start);
    out += "data: ";
    out += data.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    out += "\n";
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  out += "\n";
  return out;
}

}  // namespace ccoach
