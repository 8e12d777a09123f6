#include "finkg/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "finkg/errors.hpp"

namespace finkg {
namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

bool word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (word_byte(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw EmptyText("text has no embeddable content");
  for (double& x : v) x /= norm;
}

}  // namespace

Embedding embed(std::string_view text, EmbeddingProvider& provider) {
  if (text.empty()) throw EmptyText("cannot embed empty text");
  return provider.embed(text);
}

Embedding fallback_embed(std::string_view text, std::size_t dim) {
  if (dim < 16) throw std::invalid_argument("fallback embedding dimension must be >= 16");
  const auto tokens = word_tokens(text);
  if (tokens.empty()) throw EmptyText("no word tokens in text");

  std::vector<double> values(dim, 0.0);
  auto add = [&](const std::string& feature) {
    const auto h = fnv1a64(feature);
    values[h % dim] += (h >> 63) != 0 ? -1.0 : 1.0;
  };
  for (const auto& token : tokens) {
    add("w:" + token);
    const auto padded = "^" + token + "$";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) add("c:" + padded.substr(i, 3));
  }
  normalize(values);
  return {std::move(values), "local-hash-" + std::to_string(dim)};
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) {
    throw DimensionMismatch("cosine of " + std::to_string(a.values.size()) + "-d and " +
                            std::to_string(b.values.size()) + "-d vectors");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  return std::clamp(dot, -1.0, 1.0);
}

std::string triplet_embedding_text(const Triplet& t) { return t.subject + " " + t.relation + " " + t.object; }

// ------------------------------------------------------------------ local

LocalEmbeddingProvider::LocalEmbeddingProvider(std::size_t dim) : dim_(dim) {
  if (dim_ < 16) throw std::invalid_argument("fallback embedding dimension must be >= 16");
}

Embedding LocalEmbeddingProvider::embed(std::string_view text) {
  if (text.empty()) throw EmptyText("cannot embed empty text");
  return fallback_embed(text, dim_);
}

std::string LocalEmbeddingProvider::tag() const { return "local-hash-" + std::to_string(dim_); }

// ----------------------------------------------------------------- remote

RemoteEmbeddingProvider::RemoteEmbeddingProvider(LlmConfig cfg, std::shared_ptr<ResponseCache> cache)
    : cfg_(std::move(cfg)), cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()) {
  if (cfg_.endpoint.empty()) throw ConfigError("embedding endpoint is not configured");
}

std::string RemoteEmbeddingProvider::tag() const { return "remote:" + cfg_.model_name; }

Embedding RemoteEmbeddingProvider::embed(std::string_view text) {
  if (text.empty()) throw EmptyText("cannot embed empty text");
  const nlohmann::json key_doc = {{"kind", "embedding"}, {"model", cfg_.model_name}, {"input", text}};
  const auto key = ResponseCache::key_for(key_doc);

  std::string payload;
  if (auto hit = cache_->get(key)) {
    payload = *hit;
  } else {
    const nlohmann::json body = {{"model", cfg_.model_name}, {"input", text}};
    HttpResult result;
    try {
      result = post_json_with_retries(cfg_, "/embeddings", body.dump(), &network_calls_);
    } catch (const LlmUnavailable& e) {
      throw ProviderUnavailable(e.what());
    }
    auto response = nlohmann::json::parse(result.body, nullptr, false);
    if (response.is_discarded() || !response.contains("data") || !response["data"].is_array() ||
        response["data"].empty() || !response["data"][0].contains("embedding") ||
        !response["data"][0]["embedding"].is_array()) {
      throw ProviderUnavailable("malformed embeddings response");
    }
    payload = response["data"][0]["embedding"].dump();
    cache_->put(key, key_doc, payload);
  }

  auto vector = nlohmann::json::parse(payload, nullptr, false);
  if (vector.is_discarded() || !vector.is_array() || vector.empty()) {
    throw ProviderUnavailable("cached embedding is malformed");
  }
  std::vector<double> values;
  values.reserve(vector.size());
  for (const auto& x : vector) {
    if (!x.is_number()) throw ProviderUnavailable("embedding contains a non-number");
    values.push_back(x.get<double>());
  }
  {
    std::lock_guard lock(mutex_);
    if (!dim_) dim_ = values.size();
    if (*dim_ != values.size()) {
      throw ProviderUnavailable("embedding dimension changed from " + std::to_string(*dim_) + " to " +
                                std::to_string(values.size()));
    }
  }
  try {
    normalize(values);
  } catch (const EmptyText&) {
    throw ProviderUnavailable("provider returned a zero vector");
  }
  return {std::move(values), tag()};
}

// --------------------------------------------------------------- memoized

MemoizingEmbeddingProvider::MemoizingEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner)
    : inner_(std::move(inner)) {}

Embedding MemoizingEmbeddingProvider::embed(std::string_view text) {
  const std::string key(text);
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  auto e = inner_->embed(text);
  std::lock_guard lock(mutex_);
  return memo_.emplace(key, std::move(e)).first->second;
}

}  // namespace finkg
