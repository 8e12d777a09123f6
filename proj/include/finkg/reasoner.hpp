#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "finkg/kg_schema.hpp"
#include "finkg/llm_client.hpp"

namespace finkg {

enum class AnswerKind { Numeric, Boolean, Text };

std::string_view answer_kind_name(AnswerKind kind);

struct Answer {
  std::string raw_text;     // full model reply
  std::string answer_text;  // content of the final ANSWER line (or fallback line)
  std::optional<NormalizedValue> parsed_value;  // present iff kind == Numeric
  AnswerKind kind = AnswerKind::Text;
  bool marker_found = false;  // false: no ANSWER line, last non-empty line used
};

/// "subject relation object (period)"
std::string render_fact(const Triplet& t);

/// Numbered facts from `triplets` (in the given order), then the question.
std::string build_reasoning_prompt(std::string_view question, std::span<const Triplet> triplets);

/// Baseline prompt: same instructions, raw document text instead of facts.
std::string build_document_prompt(std::string_view question, std::string_view document_text);

/// Reads the last "ANSWER:" line of a reply. Never throws.
Answer parse_answer(std::string_view reply);

Answer answer_question(std::string_view question, std::span<const Triplet> triplets, ChatClient& client);
Answer answer_from_document(std::string_view question, std::string_view document_text, ChatClient& client);

}  // namespace finkg
