#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finkg/kg_schema.hpp"
#include "finkg/llm_client.hpp"
#include "finkg/preprocess.hpp"

namespace finkg {

/// Rule text and few-shot examples for the extraction prompt, loaded from a
/// JSON asset so they can be edited without a rebuild.
struct PromptAsset {
  struct Example {
    std::string input;
    std::string output;
  };

  std::string version;
  std::vector<std::string> rules;
  std::string output_format;
  std::vector<Example> examples;

  /// Throws ConfigError when the file is unreadable or has no rules.
  static PromptAsset load(const std::filesystem::path& path);
  static PromptAsset from_json(const nlohmann::json& j);
};

std::filesystem::path default_prompt_asset_path();

/// Rules, output-format instruction, few-shot examples, then the document.
std::string build_extraction_prompt(const PromptAsset& asset, std::string_view doc_text);

struct RejectedFragment {
  std::string fragment;
  std::vector<std::string> violations;
};

struct ExtractionResult {
  std::string doc_id;
  std::vector<Triplet> triplets;  // all pass validate_triplet
  std::vector<RejectedFragment> rejected;
  std::string raw_response;
  bool from_cache = false;
};

/// Text of the first parseable JSON array in `raw`, skipping surrounding
/// prose and code fences.
std::optional<std::string_view> find_first_json_array(std::string_view raw);

/// Maps each element of the first JSON array in `raw` through the schema
/// normalizers. Invalid elements go to `rejected`; triplets are deduplicated
/// by id. Throws NoJsonFound when no array is present.
ExtractionResult parse_extraction_response(std::string_view raw, const std::string& doc_id,
                                           std::span<const int> context_years = {});

/// Offline extractor: one triplet per numeric table cell. The column header
/// names the metric and the row key the period; when the row key is not a
/// period but the header is (years across the top), the roles swap.
std::vector<Triplet> extract_table_triplets(const FinDocument& doc);

/// Greedy packing of sentences into chunks of at most `budget_chars`
/// (a longer single sentence forms its own chunk). Consecutive chunks share
/// `overlap` sentences.
std::vector<std::vector<std::string>> chunk_sentences(std::span<const std::string> sentences,
                                                      std::size_t budget_chars, std::size_t overlap);

struct ExtractionOptions {
  std::size_t chunk_budget_chars = 6000;
  std::size_t chunk_overlap_sentences = 1;
};

/// Prompts the chat model chunk by chunk. Truncated replies are retried on
/// halves of the chunk; unparseable replies become rejected fragments. Only
/// LlmUnavailable escapes.
class LlmExtractor {
 public:
  LlmExtractor(ChatClient& client, PromptAsset asset, ExtractionOptions options = {});

  ExtractionResult extract(const FinDocument& doc);

 private:
  void extract_chunk(std::span<const std::string> sentences, std::span<const int> years, ExtractionResult& out,
                     bool& all_cached, std::vector<std::string>& responses);

  ChatClient& client_;
  PromptAsset asset_;
  ExtractionOptions options_;
};

}  // namespace finkg
