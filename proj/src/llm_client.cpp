#include "finkg/llm_client.hpp"

#include <httplib.h>

#include <cstdlib>
#include <ctime>
#include <thread>

#include "finkg/errors.hpp"
#include "finkg/hashing.hpp"
#include "finkg/io.hpp"

namespace finkg {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing '/'
};

SplitUrl split_url(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint must include a scheme: " + endpoint);
  const auto slash = endpoint.find('/', scheme + 3);
  SplitUrl out;
  out.origin = endpoint.substr(0, slash);
  out.path = slash == std::string::npos ? std::string() : endpoint.substr(slash);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

}  // namespace

void LlmConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError("temperature must be within [0, 2]");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (model_name.empty()) throw ConfigError("model_name is empty");
}

// ------------------------------------------------------------------ cache

ResponseCache::ResponseCache(std::optional<std::filesystem::path> directory) : directory_(std::move(directory)) {
  if (directory_) std::filesystem::create_directories(*directory_);
}

std::string ResponseCache::key_for(const nlohmann::json& request) { return sha256_hex(request.dump()); }

std::optional<std::string> ResponseCache::get(const std::string& key) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  }
  if (!directory_) return std::nullopt;
  const auto path = *directory_ / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  auto entry = nlohmann::json::parse(io::read_file(path), nullptr, false);
  if (entry.is_discarded() || !entry.contains("response") || !entry["response"].is_string()) return std::nullopt;
  auto response = entry["response"].get<std::string>();
  std::lock_guard lock(mutex_);
  memory_.emplace(key, response);
  return response;
}

void ResponseCache::put(const std::string& key, const nlohmann::json& request, const std::string& response) {
  {
    std::lock_guard lock(mutex_);
    memory_[key] = response;
  }
  if (!directory_) return;
  nlohmann::ordered_json entry;
  entry["request"] = request;
  entry["response"] = response;
  entry["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
  io::write_file_atomic(*directory_ / (key + ".json"), entry.dump(2));
}

// ------------------------------------------------------------------- http

HttpResult post_json_with_retries(const LlmConfig& cfg, const std::string& path, const std::string& body,
                                  std::atomic<std::size_t>* attempts) {
  if (cfg.endpoint.empty()) throw LlmUnavailable("no endpoint configured");
  const auto url = split_url(cfg.endpoint);

  httplib::Headers headers;
  if (const char* key = std::getenv(cfg.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  HttpResult last;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg.backoff_base * (1LL << std::min(attempt - 1, 10)));
    if (attempts != nullptr) ++*attempts;

    httplib::Client client(url.origin);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    auto res = client.Post(url.path + path, headers, body, "application/json");
    if (!res) {
      last = {0, {}, httplib::to_string(res.error())};
      continue;
    }
    last = {res->status, res->body, {}};
    if (res->status >= 200 && res->status < 300) return last;
    if (!retryable(res->status)) break;
  }
  throw LlmUnavailable("POST " + url.path + path + " failed: " +
                       (last.status == 0 ? last.error : "HTTP " + std::to_string(last.status)));
}

// ------------------------------------------------------------------- chat

ChatClient::ChatClient(LlmConfig cfg, std::shared_ptr<ResponseCache> cache, int max_in_flight)
    : cfg_(std::move(cfg)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      in_flight_(std::max(1, max_in_flight)) {
  cfg_.validate();
}

nlohmann::json ChatClient::request_body(const std::string& prompt) const {
  return {
      {"model", cfg_.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg_.temperature},
      {"max_tokens", cfg_.max_tokens},
  };
}

ChatReply ChatClient::complete(const std::string& prompt) {
  const nlohmann::json key_doc = {
      {"kind", "chat"}, {"model", cfg_.model_name}, {"temperature", cfg_.temperature}, {"prompt", prompt}};
  const auto key = ResponseCache::key_for(key_doc);
  if (auto hit = cache_->get(key)) return {*hit, true};

  const auto body = request_body(prompt);
  HttpResult result;
  {
    in_flight_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{in_flight_};
    result = post_json_with_retries(cfg_, "/chat/completions", body.dump(), &network_calls_);
  }

  auto response = nlohmann::json::parse(result.body, nullptr, false);
  if (response.is_discarded()) throw LlmUnavailable("chat response is not JSON");
  const auto& choices = response.value("choices", nlohmann::json::array());
  if (!choices.is_array() || choices.empty()) throw LlmUnavailable("chat response has no choices");
  const auto& choice = choices.front();
  if (choice.value("finish_reason", nlohmann::json()).is_string() &&
      choice["finish_reason"].get<std::string>() == "length") {
    throw LlmTruncated("reply truncated at max_tokens=" + std::to_string(cfg_.max_tokens));
  }
  const auto message = choice.find("message");
  if (message == choice.end() || !message->is_object() || !message->contains("content") ||
      !(*message)["content"].is_string()) {
    throw LlmUnavailable("chat response has no message content");
  }
  auto content = (*message)["content"].get<std::string>();
  cache_->put(key, key_doc, content);
  return {std::move(content), false};
}

std::string call_llm(const std::string& prompt, const LlmConfig& cfg) {
  ChatClient client(cfg);
  return client.complete(prompt).content;
}

}  // namespace finkg
