#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "finkg/errors.hpp"
#include "finkg/preprocess.hpp"

using namespace finkg;

TEST(Linearize, RowMajorSentences) {
  Table t{{"", "2009", "2008"}, {{"revenue", "$ 120.5", "$ 110.2"}, {"Operating Expenses", "", "79"}}};
  const auto s = linearize_table(t);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], "For revenue, 2009 is $ 120.5.");
  EXPECT_EQ(s[1], "For revenue, 2008 is $ 110.2.");
  EXPECT_EQ(s[2], "For Operating Expenses, 2008 is 79.");
}

TEST(Linearize, PlaceholdersForMissingLabels) {
  Table t{{"year", ""}, {{"", "5"}}};
  const auto s = linearize_table(t);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], "For row 1, column 2 is 5.");
}

TEST(Linearize, HeaderTemplating) {
  EXPECT_EQ(template_header("Net Revenue"), "net revenue");
  EXPECT_EQ(template_header("EBITDA Margin"), "EBITDA margin");
}

TEST(Normalize, WhitespaceAndNfc) {
  EXPECT_EQ(normalize_text("  a \t b\n c  "), "a b c");
  // "e" + combining acute composes to U+00E9
  EXPECT_EQ(normalize_text("caf\x65\xcc\x81"), "caf\xc3\xa9");
}

TEST(ParseRecord, RepairsRowsAndFallsBack) {
  std::vector<std::string> warnings;
  const auto doc = parse_record(std::string_view(R"({
    "id": "X-1", "pre_text": ["a ."], "post_text": [],
    "table": [["", "2009", "2008"], ["revenue", "1"], ["cost", "1", "2", "3"]],
    "qa": {"question": "q?", "answer": "", "exe_ans": 3.5, "gold_inds": ["fact one", "fact two"]}
  })"), &warnings);
  EXPECT_EQ(doc.id, "X-1");
  EXPECT_EQ(doc.table.rows[0].size(), 3u);
  EXPECT_EQ(doc.table.rows[1].size(), 3u);
  EXPECT_EQ(doc.question.gold_answer, "3.5");
  EXPECT_EQ(doc.question.gold_inds.size(), 2u);
  EXPECT_GE(warnings.size(), 3u);
}

TEST(ParseRecord, RejectsMissingFields) {
  EXPECT_THROW(parse_record(std::string_view(R"({"qa": {"question": "q"}, "pre_text": ["a"]})")), MalformedRecord);
  EXPECT_THROW(parse_record(std::string_view(R"({"id": "a", "pre_text": ["a"]})")), MalformedRecord);
  EXPECT_THROW(parse_record(std::string_view(R"({"id": "a", "qa": {"question": "q"}})")), MalformedRecord);
}

TEST(LoadSplit, SkipsBadAndDuplicateRecords) {
  const auto path = std::filesystem::temp_directory_path() / "finkg_split_test.json";
  std::ofstream(path) << R"([
    {"id": "a", "pre_text": ["x ."], "qa": {"question": "q", "answer": "1"}},
    {"id": "a", "pre_text": ["y ."], "qa": {"question": "q", "answer": "2"}},
    {"pre_text": ["z ."], "qa": {"question": "q"}},
    {"id": "b", "pre_text": ["w ."], "qa": {"question": "q", "answer": "3"}}
  ])";
  const auto split = load_split(path);
  ASSERT_EQ(split.documents.size(), 2u);
  EXPECT_EQ(split.documents[0].pre_text[0], "x .");
  EXPECT_EQ(split.documents[1].id, "b");
  EXPECT_GE(split.diagnostics.size(), 2u);
  std::filesystem::remove(path);
}

TEST(Assemble, StreamOrder) {
  FinDocument doc;
  doc.id = "d";
  doc.pre_text = {"before  text .", " "};
  doc.post_text = {"after ."};
  doc.table = Table{{"", "2010"}, {{"sales", "9"}}};
  const auto s = document_sentences(doc);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], "before text .");
  EXPECT_EQ(s[1], "For sales, 2010 is 9.");
  EXPECT_EQ(s[2], "after .");
  EXPECT_EQ(assemble_text(doc), "before text . For sales, 2010 is 9. after .");
}

TEST(Fixture, LoadsAllDocuments) {
  const auto split = load_split(std::filesystem::path(FINKG_FIXTURE_DIR) / "mini_finqa.json");
  EXPECT_EQ(split.documents.size(), 5u);
  EXPECT_EQ(split.documents[0].question.gold_answer, "9.3%");
}

TEST(Linearize, YearRevenueTable) {
  Table t{{"Year", "Revenue"}, {{"2020", "$100M"}, {"2021", "$120M"}}};
  EXPECT_EQ(linearize_table(t), (std::vector<std::string>{"For 2020, revenue is $100M.", "For 2021, revenue is $120M."}));
  FinDocument doc;
  doc.id = "t";
  doc.table = t;
  EXPECT_EQ(assemble_text(doc), "For 2020, revenue is $100M. For 2021, revenue is $120M.");
  EXPECT_TRUE(linearize_table({}).empty());
}

TEST(Linearize, TwoByThreeTable) {
  Table t{{"", "2012", "2011"}, {{"sales", "10", "9"}, {"EPS", "1.2", "1.1"}}};
  EXPECT_EQ(linearize_table(t), (std::vector<std::string>{"For sales, 2012 is 10.", "For sales, 2011 is 9.",
                                                           "For EPS, 2012 is 1.2.", "For EPS, 2011 is 1.1."}));
}

TEST(Assemble, TextOnlyAndFullFixture) {
  FinDocument doc;
  doc.pre_text = {"A.", "B."};
  EXPECT_EQ(assemble_text(doc), "A. B.");

  const auto d = load_split(std::filesystem::path(FINKG_FIXTURE_DIR) / "mini_finqa.json").documents[0];
  const auto text = assemble_text(d);
  std::vector<std::string> sources(d.pre_text.begin(), d.pre_text.end());
  for (const auto& s : linearize_table(d.table)) sources.push_back(s);
  sources.insert(sources.end(), d.post_text.begin(), d.post_text.end());
  std::size_t cursor = 0;
  for (const auto& s : sources) {
    const auto at = text.find(s, cursor);
    ASSERT_NE(at, std::string::npos) << s;
    EXPECT_EQ(text.find(s, at + 1), std::string::npos) << s;
    cursor = at + s.size();
  }
}

TEST(ParseRecord, TwoRowTableAndEmptyPostText) {
  const auto doc = parse_record(std::string_view(R"({"id": "f", "pre_text": ["p ."], "post_text": [],
    "table": [["", "2010"], ["a", "1"], ["b", "2"]], "qa": {"question": "q?", "answer": "3"}})"));
  EXPECT_EQ(doc.table.rows.size(), 2u);
  EXPECT_TRUE(doc.post_text.empty());
}
