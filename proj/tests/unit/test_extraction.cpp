#include <gtest/gtest.h>

#include <filesystem>

#include "finkg/errors.hpp"
#include "finkg/extraction.hpp"
#include "mock_llm_server.hpp"

using namespace finkg;

namespace {

std::vector<FinDocument> fixture() {
  return load_split(std::filesystem::path(FINKG_FIXTURE_DIR) / "mini_finqa.json").documents;
}

const Triplet* find(const std::vector<Triplet>& ts, const std::string& subject, const std::string& relation) {
  for (const auto& t : ts)
    if (t.subject == subject && t.relation == relation) return &t;
  return nullptr;
}

}  // namespace

TEST(PromptAsset, DefaultAssetLoads) {
  const auto asset = PromptAsset::load(default_prompt_asset_path());
  EXPECT_FALSE(asset.rules.empty());
  EXPECT_FALSE(asset.examples.empty());
  const auto prompt = build_extraction_prompt(asset, "Revenue was $5 million in 2015.");
  EXPECT_EQ(prompt.find(asset.rules.front()), 0u);
  EXPECT_NE(prompt.find("OUTPUT FORMAT:"), std::string::npos);
  EXPECT_NE(prompt.find("Example 1:"), std::string::npos);
  EXPECT_TRUE(prompt.ends_with("Document:\nRevenue was $5 million in 2015.\n\nOutput:"));
  EXPECT_THROW(PromptAsset::load("/nonexistent/prompt.json"), ConfigError);
  EXPECT_THROW(PromptAsset::from_json(nlohmann::json{{"version", "x"}}), ConfigError);
}

TEST(PromptAsset, ExamplesParseToValidTriplets) {
  const auto asset = PromptAsset::load(default_prompt_asset_path());
  for (const auto& ex : asset.examples) {
    const auto r = parse_extraction_response(ex.output, "example", std::vector<int>{2013, 2014, 2015});
    EXPECT_FALSE(r.triplets.empty()) << ex.output;
    EXPECT_TRUE(r.rejected.empty()) << ex.output;
  }
}

TEST(JsonArray, FindsFirstParseableArray) {
  EXPECT_EQ(*find_first_json_array("Sure!\n```json\n[1, 2]\n```"), "[1, 2]");
  EXPECT_EQ(*find_first_json_array("note [see below] then [{\"a\": \"x]\"}]"), "[{\"a\": \"x]\"}]");
  EXPECT_FALSE(find_first_json_array("no array here"));
  EXPECT_FALSE(find_first_json_array("[unterminated"));
}

TEST(ParseResponse, MapsAndValidates) {
  const std::string raw = R"(Here are the facts:
[
 {"subject": "NET_REVENUE:Entergy", "relation": "HAS_VALUE_IN_2015", "object": "$5,829 million",
  "financial_metric_entity_type": "net revenue", "company": "Entergy", "period": "2015", "value": "5829", "unit": "million USD"},
 {"subject": "NET_REVENUE:Entergy", "relation": "HAS_VALUE_IN_2015", "object": "5829 million USD",
  "financial_metric_entity_type": "NET_REVENUE", "company": "Entergy", "period": "2015", "value": "5829", "unit": "million USD"},
 {"subject": "RENT:null", "relation": "HAS_VALUE_AFTER", "object": "40 million USD",
  "financial_metric_entity_type": "RENT", "company": "null", "period": "thereafter", "value": "40", "unit": "million USD"},
 {"subject": "DEBT", "relation": "HAS_VALUE_IN_2014", "object": "about twelve", "value": "12", "period": "2014"},
 {"subject": "X", "relation": "HAS_VALUE", "object": "n/a"},
 "not an object"
])";
  const int years[] = {2014, 2015};
  const auto r = parse_extraction_response(raw, "doc-1", years);
  ASSERT_EQ(r.triplets.size(), 2u);
  EXPECT_EQ(r.triplets[0].subject, "NET_REVENUE:Entergy");
  EXPECT_EQ(r.triplets[0].object, "5829 million USD");
  EXPECT_EQ(r.triplets[0].source_doc, "doc-1");
  EXPECT_EQ(r.triplets[1].subject, "RENT");
  EXPECT_EQ(r.triplets[1].relation, "HAS_VALUE_AFTER_2015");
  EXPECT_FALSE(r.triplets[1].company);
  ASSERT_EQ(r.rejected.size(), 3u);
  EXPECT_EQ(r.rejected[0].violations.front(), "ObjectValueMismatch");
  EXPECT_EQ(r.rejected[1].violations.front(), "NotNumeric");
  for (const auto& t : r.triplets) EXPECT_TRUE(validate_triplet(t).empty());
  EXPECT_THROW(parse_extraction_response("I could not find any facts.", "d"), NoJsonFound);
}

TEST(TableExtraction, YearsAcrossHeader) {
  const auto docs = fixture();
  const auto ts = extract_table_triplets(docs[0]);
  ASSERT_EQ(ts.size(), 4u);
  const auto* rev = find(ts, "REVENUE", "HAS_VALUE_IN_2009");
  ASSERT_NE(rev, nullptr);
  EXPECT_EQ(rev->object, "120.5 USD");
  for (const auto& t : ts) EXPECT_TRUE(validate_triplet(t).empty());
}

TEST(TableExtraction, YearsDownRowKeys) {
  const auto docs = fixture();
  const auto ts = extract_table_triplets(docs[3]);
  ASSERT_EQ(ts.size(), 3u);
  EXPECT_NE(find(ts, "MINIMUM_LEASE_PAYMENTS", "HAS_VALUE_IN_2014"), nullptr);
  const auto* after = find(ts, "MINIMUM_LEASE_PAYMENTS", "HAS_VALUE_AFTER_2015");
  ASSERT_NE(after, nullptr);
  EXPECT_EQ(after->value.to_string(), "40");
}

TEST(TableExtraction, YearRowsRevenueColumn) {
  FinDocument doc;
  doc.id = "t";
  doc.table = Table{{"Year", "Revenue"}, {{"2020", "$100M"}, {"2021", "$120M"}}};
  const auto ts = extract_table_triplets(doc);
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts[0].subject, "REVENUE");
  EXPECT_EQ(ts[0].relation, "HAS_VALUE_IN_2020");
  EXPECT_EQ(ts[0].object, "100 million USD");
  EXPECT_EQ(ts[1].object, "120 million USD");
}

TEST(Chunking, BudgetAndOverlap) {
  const std::vector<std::string> s = {"aaaa", "bbbb", "cccc", "dddd", "eeee"};
  const auto chunks = chunk_sentences(s, 9, 1);
  ASSERT_EQ(chunks.size(), 4u);
  EXPECT_EQ(chunks[0], (std::vector<std::string>{"aaaa", "bbbb"}));
  EXPECT_EQ(chunks[1], (std::vector<std::string>{"bbbb", "cccc"}));
  EXPECT_EQ(chunks[3], (std::vector<std::string>{"dddd", "eeee"}));
  EXPECT_EQ(chunk_sentences(s, 1000, 1).size(), 1u);
  const std::vector<std::string> big = {std::string(50, 'x'), "y"};
  EXPECT_EQ(chunk_sentences(big, 10, 0).size(), 2u);
  EXPECT_TRUE(chunk_sentences({}, 10, 1).empty());
}

TEST(LlmExtractor, SplitsTruncatedChunks) {
  // Replies with "length" whenever the chunk holds both table sentences.
  mock::MockLlmServer server([](const std::string& prompt) {
    const auto doc = prompt.substr(prompt.rfind("Document:"));
    const bool has_2009 = doc.find("2009 is $ 120.5") != std::string::npos;
    const bool has_2008 = doc.find("2008 is $ 110.2") != std::string::npos;
    if (has_2009 && has_2008) return mock::MockReply{200, "[{\"subject\"", "length"};
    if (has_2009) {
      return mock::MockReply{200,
                             R"([{"financial_metric_entity_type": "REVENUE", "period": "2009", "value": "120.5", "unit": "USD"}])",
                             "stop"};
    }
    if (has_2008) return mock::MockReply{200, "nothing to report", "stop"};
    return mock::MockReply{200, "[]", "stop"};
  });
  LlmConfig cfg;
  cfg.endpoint = server.endpoint();
  ChatClient client(cfg);
  LlmExtractor extractor(client, PromptAsset::load(default_prompt_asset_path()));
  const auto r = extractor.extract(fixture()[0]);
  ASSERT_EQ(r.triplets.size(), 1u);
  EXPECT_EQ(r.triplets[0].relation, "HAS_VALUE_IN_2009");
  bool saw_no_json = false;
  for (const auto& rej : r.rejected) saw_no_json |= rej.violations.front() == "NoJsonFound";
  EXPECT_TRUE(saw_no_json);
  EXPECT_FALSE(r.from_cache);
  EXPECT_TRUE(extractor.extract(fixture()[0]).from_cache);
}

TEST(PromptAsset, PromptCarriesExtractionRules) {
  const auto prompt = build_extraction_prompt(PromptAsset::load(default_prompt_asset_path()), "any text");
  EXPECT_NE(prompt.find("Use EXACT TEXT"), std::string::npos);
  EXPECT_NE(prompt.find("Standardize periods"), std::string::npos);
}

TEST(ParseResponse, EntergyObject) {
  const auto r = parse_extraction_response(
      R"([{"subject": "NET_REVENUE:Entergy", "relation": "HAS_VALUE_IN_2015", "object": "5829 million USD",
           "financial_metric_entity_type": "NET_REVENUE", "company": "Entergy", "period": "2015",
           "value": "5829", "unit": "million USD"}])",
      "ETR");
  EXPECT_EQ(r.triplets.size(), 1u);
  EXPECT_TRUE(r.rejected.empty());
}

TEST(ParseResponse, OneValidOneMismatched) {
  const auto r = parse_extraction_response(
      R"([{"subject": "EPS", "period": "2015", "object": "2.1 USD", "value": "2.1", "unit": "USD"},
          {"subject": "EPS", "period": "2014", "object": "USD", "value": "1.9", "unit": "USD"}])",
      "d");
  EXPECT_EQ(r.triplets.size(), 1u);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].violations, std::vector<std::string>{"ObjectValueMismatch"});
}

TEST(TableExtraction, TextAndMixedTables) {
  FinDocument doc;
  doc.id = "t";
  doc.table = Table{{"segment", "region"}, {{"retail", "north"}, {"wholesale", "south"}}};
  EXPECT_TRUE(extract_table_triplets(doc).empty());

  // 3x3 with one text cell and one blank: 4 numeric cells
  doc.table = Table{{"", "2019", "2018"}, {{"revenue", "$ 10", "n/a"}, {"cost", "4", ""}, {"margin", "60%", "55%"}}};
  const auto ts = extract_table_triplets(doc);
  ASSERT_EQ(ts.size(), 4u);
  EXPECT_EQ(ts[0].subject, "REVENUE");
  EXPECT_EQ(ts[0].object, "10 USD");
  EXPECT_EQ(ts[1].subject, "COST");
  EXPECT_EQ(ts[2].relation, "HAS_VALUE_IN_2019");
  EXPECT_EQ(ts[3].object, "55 percent");
}
