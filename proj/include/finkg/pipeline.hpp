#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finkg/embedding.hpp"
#include "finkg/evaluator.hpp"
#include "finkg/extraction.hpp"
#include "finkg/llm_client.hpp"
#include "finkg/retriever.hpp"

namespace finkg {

enum class AnswerMode { Vanilla, Kg };

std::string_view mode_name(AnswerMode mode);
AnswerMode parse_mode(std::string_view text);

struct PipelineConfig {
  std::filesystem::path train_path;
  std::filesystem::path dev_path;
  std::filesystem::path test_path;
  std::filesystem::path output_dir = "finkg-out";
  std::filesystem::path cache_dir;  // empty: in-memory cache only
  std::uint64_t seed = 42;
  int max_in_flight = 4;

  LlmConfig chat;
  std::string extractor = "llm";  // llm | table
  std::filesystem::path prompt_asset = default_prompt_asset_path();
  ExtractionOptions extraction;

  std::string embedding_provider = "local";  // local | remote
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  LlmConfig embeddings;  // endpoint and model for the remote provider

  LlmConfig judge;  // used only when judge.endpoint is set
  JudgeRules judge_rules;

  TrainConfig training;  // positive_weight <= 0 selects #neg/#pos
  std::string filter_mode = "topk";  // topk | threshold
  std::size_t top_k = 10;
  double threshold = 0.5;

  /// Throws ConfigError for unknown enum values or inconsistent settings.
  void validate() const;
};

/// Runs the pipeline stages over flat JSONL artifacts in output_dir.
///
/// Every stage is deterministic given its inputs and cache: re-running a
/// stage rewrites byte-identical files. A stage whose upstream artifact is
/// missing throws MissingArtifact naming the command that produces it.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);

  std::filesystem::path ingest(const std::string& split);
  std::filesystem::path extract(const std::string& split);
  std::filesystem::path train_retriever();
  std::filesystem::path answer(const std::string& split, AnswerMode mode);
  EvalSummary evaluate(const std::string& split, AnswerMode mode,
                       const std::optional<std::filesystem::path>& predictions = std::nullopt);
  /// Each argument is an accuracy in percent or the path of an accuracy file
  /// written by `evaluate`.
  std::string report(const std::string& baseline, const std::string& treatment);

  std::filesystem::path artifact(const std::string& name) const { return cfg_.output_dir / name; }
  const PipelineConfig& config() const { return cfg_; }

  /// Chat HTTP attempts made by this pipeline (extraction, answering, judge).
  std::size_t chat_network_calls() const;

 private:
  std::filesystem::path split_path(const std::string& split) const;
  std::vector<FinDocument> load_documents(const std::string& split) const;
  std::filesystem::path require(const std::string& name, const std::string& producer) const;
  ChatClient& chat();
  EmbeddingProvider& embedder();
  MlpModel load_model();

  PipelineConfig cfg_;
  std::shared_ptr<ResponseCache> cache_;
  std::unique_ptr<ChatClient> chat_;
  std::unique_ptr<LlmJudge> judge_;
  std::shared_ptr<EmbeddingProvider> embedder_;
};

}  // namespace finkg
