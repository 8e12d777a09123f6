#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>

#include <json.hpp>

namespace finkg {

/// Chat-completion settings. Defaults follow the extraction/reasoning setup:
/// temperature 0.2, at most 2048 generated tokens.
struct LlmConfig {
  std::string model_name = "meta-llama/Llama-3.1-8B-Instruct";
  double temperature = 0.2;
  int max_tokens = 2048;
  std::string endpoint;  // base URL, e.g. http://localhost:8000/v1
  std::string api_key_env = "FINKG_API_KEY";
  int max_retries = 3;
  std::chrono::milliseconds timeout{120000};
  std::chrono::milliseconds backoff_base{500};

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Request/response memo shared by chat and embedding clients.
///
/// Entries live in memory and, when a directory is given, as one JSON file
/// per request hash holding {request, response, timestamp}. Concurrent
/// writers of the same key are harmless: content is identical and files are
/// replaced atomically.
class ResponseCache {
 public:
  explicit ResponseCache(std::optional<std::filesystem::path> directory = std::nullopt);

  std::optional<std::string> get(const std::string& key);
  void put(const std::string& key, const nlohmann::json& request, const std::string& response);

  /// Stable key for a request document.
  static std::string key_for(const nlohmann::json& request);

 private:
  std::optional<std::filesystem::path> directory_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::string> memory_;
};

struct HttpResult {
  int status = 0;  // 0 on transport failure
  std::string body;
  std::string error;
};

/// POSTs JSON to {endpoint}{path}, retrying transport failures, 429 and 5xx
/// with exponential backoff. Throws LlmUnavailable once retries run out or on
/// any other non-2xx status.
HttpResult post_json_with_retries(const LlmConfig& cfg, const std::string& path, const std::string& body,
                                  std::atomic<std::size_t>* attempts = nullptr);

struct ChatReply {
  std::string content;
  bool from_cache = false;
};

/// OpenAI-compatible chat client: POST {endpoint}/chat/completions with
/// {model, messages, temperature, max_tokens}; reads choices[0].message.content.
/// Identical (prompt, model, temperature) requests are served from the cache.
class ChatClient {
 public:
  explicit ChatClient(LlmConfig cfg, std::shared_ptr<ResponseCache> cache = nullptr, int max_in_flight = 4);

  /// Throws LlmUnavailable, or LlmTruncated when the reply hit max_tokens.
  ChatReply complete(const std::string& prompt);

  const LlmConfig& config() const { return cfg_; }
  /// HTTP attempts made so far, retries included.
  std::size_t network_calls() const { return network_calls_.load(); }

  nlohmann::json request_body(const std::string& prompt) const;

 private:
  LlmConfig cfg_;
  std::shared_ptr<ResponseCache> cache_;
  std::counting_semaphore<> in_flight_;
  std::atomic<std::size_t> network_calls_{0};
};

/// One-shot call without a persistent cache.
std::string call_llm(const std::string& prompt, const LlmConfig& cfg);

}  // namespace finkg
