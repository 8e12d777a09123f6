#include "fixture_llm.hpp"

#include <json.hpp>

#include "finkg/extraction.hpp"

namespace finkg::mock {

std::string fixture_path() { return std::string(FINKG_FIXTURE_DIR) + "/mini_finqa.json"; }

MockLlmServer::ChatHandler corpus_handler(std::vector<FinDocument> docs, bool scrambled) {
  return [docs = std::move(docs), scrambled](const std::string& prompt) {
    if (prompt.find("OUTPUT FORMAT:") != std::string::npos) {
      const auto body = prompt.substr(prompt.rfind("Document:"));
      for (const auto& doc : docs) {
        if (doc.pre_text.empty() || body.find(normalize_text(doc.pre_text.front())) == std::string::npos) continue;
        nlohmann::json out = nlohmann::json::array();
        for (const auto& t : extract_table_triplets(doc)) {
          out.push_back({{"subject", t.subject},
                         {"relation", t.relation},
                         {"object", t.object},
                         {"financial_metric_entity_type", t.metric_type},
                         {"company", nullptr},
                         {"period", t.period.canonical()},
                         {"value", t.value.to_string()},
                         {"unit", t.unit}});
        }
        return MockReply{200, "Extracted facts:\n" + out.dump(1), "stop"};
      }
      return MockReply{200, "[]", "stop"};
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (prompt.find("Question: " + docs[i].question.text) == std::string::npos) continue;
      const auto& source = scrambled ? docs[(i + 1) % docs.size()] : docs[i];
      return MockReply{200, "Looking at the facts step by step.\nANSWER: " + source.question.gold_answer, "stop"};
    }
    return MockReply{200, "ANSWER: unknown", "stop"};
  };
}

}  // namespace finkg::mock
