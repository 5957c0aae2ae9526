#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ccoach/config.hpp"
#include "ccoach/prompt.hpp"

namespace ccoach {

inline constexpr std::string_view kDisclaimer =
    "Here is an AI generated explanation. Be careful - it may be wrong!\n\n";

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct TransportResult {
  long status = 0;         // HTTP status, 0 if no response arrived
  bool completed = false;  // body received through to a clean end
  std::string error;       // transport-level failure description
};

/// Streams a POST response body to `on_data` as it arrives. Returning false
/// from `on_data` aborts the transfer.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual TransportResult post(const HttpRequest& request,
                               const std::function<bool(std::string_view)>& on_data) = 0;
};

/// libcurl-backed HTTP(S) transport. `cancelled` is polled during the
/// transfer so an interrupt stops the request promptly.
class CurlTransport final : public ChatTransport {
 public:
  explicit CurlTransport(const std::atomic<bool>* cancelled = nullptr);
  ~CurlTransport() override;
  TransportResult post(const HttpRequest& request,
                       const std::function<bool(std::string_view)>& on_data) override;

 private:
  const std::atomic<bool>* cancelled_;
};

/// Offline backend: replays `<dir>/<prompt hash>.txt` (or `default.txt`) as
/// a chat-completions event stream. Selected with api_base_url = "mock:<dir>".
class CannedTransport final : public ChatTransport {
 public:
  explicit CannedTransport(std::filesystem::path directory, std::size_t chunk_bytes = 7);
  TransportResult post(const HttpRequest& request,
                       const std::function<bool(std::string_view)>& on_data) override;

  int call_count() const noexcept { return calls_; }

 private:
  std::filesystem::path directory_;
  std::size_t chunk_bytes_;
  int calls_ = 0;
};

/// Hash used to key canned responses.
std::string prompt_hash(const PromptBundle& bundle);

/// Encodes `text` as the event stream a chat-completions server would send,
/// split into `chunk_bytes` deltas and closed with "[DONE]".
std::string encode_completion_stream(std::string_view text, std::size_t chunk_bytes);

/// Request body with model, both messages, stream=true and temperature.
std::string build_request_body(const PromptBundle& bundle, const ToolConfig& config);

std::unique_ptr<ChatTransport> make_transport(const ToolConfig& config,
                                              const std::atomic<bool>* cancelled = nullptr);

using ChunkSink = std::function<void(std::string_view)>;

struct StreamOptions {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
  std::function<void(std::chrono::milliseconds)> sleep;  // default: this_thread::sleep_for
  std::string api_key;  // resolved by the caller; empty for the canned backend
};

/// Sends `bundle` with stream=true and forwards each content delta to `sink`
/// in arrival order. The sink first receives kDisclaimer, immediately before
/// the first delta. Returns the concatenated deltas.
///
/// Failures before any byte arrives are retried (NetworkError after
/// max_retries); 401/403 raise AuthError; a stream that ends without
/// "[DONE]" raises StreamInterrupted carrying the text received.
std::string stream_completion(const PromptBundle& bundle, const ToolConfig& config,
                              const ChunkSink& sink, ChatTransport& transport,
                              const StreamOptions& options = {});

}  // namespace ccoach
