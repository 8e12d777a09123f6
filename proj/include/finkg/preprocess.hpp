#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "finkg/decimal.hpp"

namespace finkg {

/// Header row plus data rows. Every row has the header's arity; the first
/// column of a data row is its row key.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool empty() const { return header.empty() && rows.empty(); }
  std::size_t columns() const { return header.size(); }
};

struct QuestionRecord {
  std::string text;
  std::string gold_answer;
  std::optional<Decimal> gold_exe_answer;
  std::optional<std::string> gold_program;
  std::vector<std::string> gold_inds;
};

struct FinDocument {
  std::string id;
  std::vector<std::string> pre_text;
  std::vector<std::string> post_text;
  Table table;
  QuestionRecord question;
};

/// Maps one FinQA-format object onto a FinDocument.
///
/// Short table rows are padded with empty cells (long rows are truncated);
/// each repair appends a message to `warnings` when it is non-null. Throws
/// MalformedRecord when the id or question text is missing, or when the
/// document carries no content at all.
FinDocument parse_record(const nlohmann::json& record, std::vector<std::string>* warnings = nullptr);
FinDocument parse_record(std::string_view raw_json, std::vector<std::string>* warnings = nullptr);

struct LoadedSplit {
  std::vector<FinDocument> documents;
  std::vector<std::string> diagnostics;  // skipped records and repairs
};

/// Loads a FinQA JSON array file. Malformed records and duplicate ids are
/// skipped with a diagnostic rather than failing the whole split.
LoadedSplit load_split(const std::filesystem::path& path);

/// One sentence per non-empty data cell, row-major:
/// "For {row key}, {column header} is {cell}."
std::vector<std::string> linearize_table(const Table& table);

/// The header as it appears inside a template sentence: words are lowercased
/// unless they are fully uppercase acronyms ("EPS").
std::string template_header(std::string_view header);

/// Collapses whitespace runs to one space, trims, and applies Unicode NFC.
std::string normalize_text(std::string_view text);

/// Normalized, non-empty sentences in stream order: pre_text, linearized
/// table, post_text.
std::vector<std::string> document_sentences(const FinDocument& doc);

/// `document_sentences` joined by single spaces.
std::string assemble_text(const FinDocument& doc);

/// Newline-delimited record for the assembled-documents artifact:
/// {"id":...,"text":...,"n_table_sentences":...}
std::string assembled_document_line(const FinDocument& doc);

}  // namespace finkg
