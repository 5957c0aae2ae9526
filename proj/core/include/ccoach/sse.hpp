#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace ccoach {

/// Incremental server-sent-events decoder. Bytes may arrive split anywhere;
/// each complete event's data (multi-line data joined with '\n') is handed to
/// the callback when its terminating blank line arrives.
class SseParser {
 public:
  using EventHandler = std::function<void(std::string_view event, std::string_view data)>;

  explicit SseParser(EventHandler on_event) : on_event_(std::move(on_event)) {}

  void feed(std::string_view bytes);

  /// True if an event was started but not terminated.
  bool has_pending_event() const noexcept { return !data_.empty() || !line_.empty(); }

 private:
  void process_line(std::string_view line);
  void dispatch();

  EventHandler on_event_;
  std::string line_;
  std::string data_;
  std::string event_;
  bool has_data_ = false;
  bool last_was_cr_ = false;
};

/// Encodes `data` as one SSE event.
std::string encode_sse_event(std::string_view data);

}  // namespace ccoach
