#include "ccoach/completion.hpp"

#include <curl/curl.h>

#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "ccoach/errors.hpp"
#include "ccoach/hashing.hpp"
#include "ccoach/sse.hpp"

namespace ccoach {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kCancelled = "cancelled";

std::string hash_messages(std::string_view system, std::string_view user) {
  std::string joined(system);
  joined.push_back('\0');
  joined += user;
  return sha256_hex(joined).substr(0, 16);
}

struct CurlCall {
  const std::function<bool(std::string_view)>* on_data;
  const std::atomic<bool>* cancelled;
};

size_t write_callback(char* data, size_t size, size_t count, void* user) {
  auto* call = static_cast<CurlCall*>(user);
  size_t bytes = size * count;
  if (!(*call->on_data)(std::string_view(data, bytes))) return 0;
  return bytes;
}

int progress_callback(void* user, curl_off_t, curl_off_t, curl_off_t, curl_off_t) {
  auto* call = static_cast<CurlCall*>(user);
  return call->cancelled && call->cancelled->load() ? 1 : 0;
}

std::size_t utf8_safe_cut(std::string_view text, std::size_t pos, std::size_t want) {
  std::size_t end = std::min(text.size(), pos + want);
  while (end < text.size() && end > pos + 1 && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) --end;
  return end;
}

std::string error_message_from(std::string_view body) {
  try {
    auto j = json::parse(body);
    if (j.contains("error") && j["error"].contains("message")) return j["error"]["message"].get<std::string>();
  } catch (const json::exception&) {
  }
  return std::string(body.substr(0, 200));
}

}  // namespace

CurlTransport::CurlTransport(const std::atomic<bool>* cancelled) : cancelled_(cancelled) {
  static std::once_flag once;
  std::call_once(once, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

CurlTransport::~CurlTransport() = default;

TransportResult CurlTransport::post(const HttpRequest& request,
                                    const std::function<bool(std::string_view)>& on_data) {
  TransportResult result;
  CURL* curl = curl_easy_init();
  if (!curl) {
    result.error = "cannot initialise HTTP client";
    return result;
  }
  curl_slist* headers = nullptr;
  for (const auto& [name, value] : request.headers) {
    headers = curl_slist_append(headers, (name + ": " + value).c_str());
  }
  CurlCall call{&on_data, cancelled_};
  curl_easy_setopt(curl, CURLOPT_URL, request.url.c_str());
  curl_easy_setopt(curl, CURLOPT_POST, 1L);
  curl_easy_setopt(curl, CURLOPT_POSTFIELDS, request.body.data());
  curl_easy_setopt(curl, CURLOPT_POSTFIELDSIZE_LARGE, static_cast<curl_off_t>(request.body.size()));
  curl_easy_setopt(curl, CURLOPT_HTTPHEADER, headers);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, write_callback);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &call);
  curl_easy_setopt(curl, CURLOPT_NOPROGRESS, 0L);
  curl_easy_setopt(curl, CURLOPT_XFERINFOFUNCTION, progress_callback);
  curl_easy_setopt(curl, CURLOPT_XFERINFODATA, &call);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 15L);
  curl_easy_setopt(curl, CURLOPT_LOW_SPEED_LIMIT, 1L);
  curl_easy_setopt(curl, CURLOPT_LOW_SPEED_TIME, 60L);
  curl_easy_setopt(curl, CURLOPT_NOSIGNAL, 1L);

  CURLcode code = curl_easy_perform(curl);
  curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &result.status);
  if (code == CURLE_OK) {
    result.completed = true;
  } else if (code == CURLE_ABORTED_BY_CALLBACK && cancelled_ && cancelled_->load()) {
    result.error = std::string(kCancelled);
  } else {
    result.error = curl_easy_strerror(code);
  }
  curl_slist_free_all(headers);
  curl_easy_cleanup(curl);
  return result;
}

CannedTransport::CannedTransport(fs::path directory, std::size_t chunk_bytes)
    : directory_(std::move(directory)), chunk_bytes_(std::max<std::size_t>(1, chunk_bytes)) {}

TransportResult CannedTransport::post(const HttpRequest& request,
                                      const std::function<bool(std::string_view)>& on_data) {
  ++calls_;
  TransportResult result;
  std::string key;
  try {
    auto body = json::parse(request.body);
    std::string system;
    std::string user;
    for (const auto& m : body.at("messages")) {
      if (m.at("role") == "system") system = m.at("content").get<std::string>();
      if (m.at("role") == "user") user = m.at("content").get<std::string>();
    }
    key = hash_messages(system, user);
  } catch (const json::exception&) {
    result.status = 400;
    result.completed = true;
    on_data(R"({"error":{"message":"malformed request"}})");
    return result;
  }
  std::ifstream in(directory_ / (key + ".txt"), std::ios::binary);
  if (!in) in.open(directory_ / "default.txt", std::ios::binary);
  if (!in) {
    result.status = 404;
    result.completed = true;
    on_data(R"({"error":{"message":"no canned response for prompt )" + key + R"("}})");
    return result;
  }
  std::ostringstream text;
  text << in.rdbuf();
  std::string stream = encode_completion_stream(text.str(), chunk_bytes_);
  result.status = 200;
  for (std::size_t pos = 0; pos < stream.size(); pos += 13) {
    if (!on_data(std::string_view(stream).substr(pos, 13))) return result;
  }
  result.completed = true;
  return result;
}

std::string prompt_hash(const PromptBundle& bundle) {
  return hash_messages(bundle.system_message, bundle.user_message);
}

std::string encode_completion_stream(std::string_view text, std::size_t chunk_bytes) {
  chunk_bytes = std::max<std::size_t>(1, chunk_bytes);
  std::string out = encode_sse_event(json{{"choices", {{{"index", 0}, {"delta", {{"role", "assistant"}}}}}}}.dump());
  for (std::size_t pos = 0; pos < text.size();) {
    std::size_t end = utf8_safe_cut(text, pos, chunk_bytes);
    json event = {{"choices", {{{"index", 0}, {"delta", {{"content", std::string(text.substr(pos, end - pos))}}}}}}};
    out += encode_sse_event(event.dump());
    pos = end;
  }
  out += encode_sse_event("[DONE]");
  return out;
}

std::string build_request_body(const PromptBundle& bundle, const ToolConfig& config) {
  json body = {{"model", config.model_name},
               {"messages",
                {{{"role", "system"}, {"content", bundle.system_message}},
                 {{"role", "user"}, {"content", bundle.user_message}}}},
               {"stream", true},
               {"temperature", config.temperature}};
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::unique_ptr<ChatTransport> make_transport(const ToolConfig& config, const std::atomic<bool>* cancelled) {
  constexpr std::string_view kMock = "mock:";
  if (config.api_base_url.starts_with(kMock)) {
    return std::make_unique<CannedTransport>(config.api_base_url.substr(kMock.size()));
  }
  return std::make_unique<CurlTransport>(cancelled);
}

std::string stream_completion(const PromptBundle& bundle, const ToolConfig& config, const ChunkSink& sink,
                              ChatTransport& transport, const StreamOptions& options) {
  HttpRequest request;
  std::string base = config.api_base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  request.url = base + "/chat/completions";
  request.headers = {{"Content-Type", "application/json"}, {"Accept", "text/event-stream"}};
  if (!options.api_key.empty()) request.headers.emplace_back("Authorization", "Bearer " + options.api_key);
  request.body = build_request_body(bundle, config);

  auto sleep = options.sleep ? options.sleep : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  std::string last_error;
  for (int attempt = 0;; ++attempt) {
    std::string full;
    std::string raw;
    std::string stream_error;
    bool done = false;
    bool disclaimer_sent = false;
    SseParser parser([&](std::string_view, std::string_view data) {
      if (done) return;
      if (data == "[DONE]") {
        done = true;
        return;
      }
      json event;
      try {
        event = json::parse(data);
      } catch (const json::exception&) {
        return;
      }
      if (event.contains("error")) {
        stream_error = error_message_from(data);
        return;
      }
      if (!event.contains("choices") || !event["choices"].is_array() || event["choices"].empty()) return;
      const auto& delta = event["choices"][0].value("delta", json::object());
      if (!delta.contains("content") || !delta["content"].is_string()) return;
      std::string content = delta["content"].get<std::string>();
      if (content.empty()) return;
      if (!disclaimer_sent) {
        sink(kDisclaimer);
        disclaimer_sent = true;
      }
      sink(content);
      full += content;
    });
    TransportResult result = transport.post(request, [&](std::string_view bytes) {
      raw += bytes;
      parser.feed(bytes);
      return true;
    });

    if (result.status == 401 || result.status == 403) {
      throw AuthError("the explanation service rejected the API key: " + error_message_from(raw));
    }
    if (done) return full;
    if (result.error == kCancelled) throw StreamInterrupted("explanation interrupted", full);
    bool ok_status = result.status >= 200 && result.status < 300;
    if (ok_status && !raw.empty()) {
      std::string why = !stream_error.empty() ? stream_error
                        : !result.error.empty() ? result.error
                                                : "the connection closed before the explanation finished";
      throw StreamInterrupted("explanation stream interrupted: " + why, full);
    }
    bool retriable = result.status == 0 || result.status == 429 || result.status >= 500 || ok_status;
    last_error = result.status ? "HTTP " + std::to_string(result.status) + ": " + error_message_from(raw)
                               : (result.error.empty() ? "no response" : result.error);
    if (!retriable) throw NetworkError("explanation request failed: " + last_error);
    if (attempt >= options.max_retries) break;
    sleep(options.initial_backoff * (1 << attempt));
  }
  throw NetworkError("explanation request failed after " + std::to_string(options.max_retries + 1) +
                     " attempts: " + last_error);
}

}  // namespace ccoach
