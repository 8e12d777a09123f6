#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "finkg/kg_schema.hpp"
#include "finkg/llm_client.hpp"

namespace finkg {

/// Unit-norm text vector. Dimension is fixed per provider within a run.
struct Embedding {
  std::vector<double> values;
  std::string provider_tag;

  std::size_t dimension() const { return values.size(); }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// Throws EmptyText or ProviderUnavailable.
  virtual Embedding embed(std::string_view text) = 0;
  virtual std::string tag() const = 0;
};

/// Checks the text precondition, then delegates to `provider`.
Embedding embed(std::string_view text, EmbeddingProvider& provider);

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

/// Signed feature hashing of lowercase word tokens and their character
/// trigrams (word padded as "^word$"). Each feature string ("w:" + token or
/// "c:" + trigram) is hashed with 64-bit FNV-1a; bucket = hash % dim, sign is
/// the hash's top bit. The summed vector is L2-normalized. Throws EmptyText
/// when there are no tokens, std::invalid_argument when dim < 16.
Embedding fallback_embed(std::string_view text, std::size_t dim = kDefaultEmbeddingDim);

/// Dot product of unit vectors, clamped to [-1, 1]. Throws DimensionMismatch.
double cosine(const Embedding& a, const Embedding& b);

/// "{subject} {relation} {object}"
std::string triplet_embedding_text(const Triplet& t);

class LocalEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit LocalEmbeddingProvider(std::size_t dim = kDefaultEmbeddingDim);
  Embedding embed(std::string_view text) override;
  std::string tag() const override;

 private:
  std::size_t dim_;
};

/// POST {endpoint}/embeddings with {model, input}; reads data[0].embedding.
/// Responses are cached like chat replies and normalized on output.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(LlmConfig cfg, std::shared_ptr<ResponseCache> cache = nullptr);
  Embedding embed(std::string_view text) override;
  std::string tag() const override;
  std::size_t network_calls() const { return network_calls_.load(); }

 private:
  LlmConfig cfg_;
  std::shared_ptr<ResponseCache> cache_;
  std::mutex mutex_;
  std::optional<std::size_t> dim_;
  std::atomic<std::size_t> network_calls_{0};
};

/// In-memory memo in front of another provider; safe for concurrent use.
class MemoizingEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit MemoizingEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner);
  Embedding embed(std::string_view text) override;
  std::string tag() const override { return inner_->tag(); }

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  std::mutex mutex_;
  std::unordered_map<std::string, Embedding> memo_;
};

}  // namespace finkg
