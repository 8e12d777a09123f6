#include "finkg/preprocess.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <cctype>
#include <unordered_set>

#include "finkg/errors.hpp"
#include "finkg/io.hpp"

namespace finkg {
namespace {

using nlohmann::json;

std::vector<std::string> string_array(const json& node) {
  std::vector<std::string> out;
  if (!node.is_array()) return out;
  for (const auto& item : node) {
    if (item.is_string()) out.push_back(item.get<std::string>());
  }
  return out;
}

std::string cell_text(const json& cell) {
  if (cell.is_string()) return cell.get<std::string>();
  if (cell.is_null()) return {};
  return cell.dump();
}

std::string scalar_text(const json& node) {
  if (node.is_string()) return node.get<std::string>();
  if (node.is_number()) return Decimal::from_double(node.get<double>()).to_string();
  return {};
}

std::optional<Decimal> exe_answer(const json& node) {
  if (node.is_number()) return Decimal::from_double(node.get<double>());
  if (node.is_string()) return Decimal::parse(node.get<std::string>());
  return std::nullopt;
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

}  // namespace

FinDocument parse_record(const json& record, std::vector<std::string>* warnings) {
  auto warn = [&](const std::string& message) {
    if (warnings != nullptr) warnings->push_back(message);
  };
  if (!record.is_object()) throw MalformedRecord("record is not a JSON object");

  FinDocument doc;
  if (auto it = record.find("id"); it != record.end() && it->is_string()) doc.id = it->get<std::string>();
  if (doc.id.empty()) throw MalformedRecord("record has no id");

  auto qa = record.find("qa");
  if (qa == record.end() || !qa->is_object()) throw MalformedRecord(doc.id + ": record has no qa object");
  if (auto it = qa->find("question"); it != qa->end() && it->is_string()) doc.question.text = it->get<std::string>();
  if (doc.question.text.empty()) throw MalformedRecord(doc.id + ": question text is missing");

  if (auto it = record.find("pre_text"); it != record.end()) doc.pre_text = string_array(*it);
  if (auto it = record.find("post_text"); it != record.end()) doc.post_text = string_array(*it);

  if (auto it = record.find("table"); it != record.end() && it->is_array() && !it->empty()) {
    const auto& rows = *it;
    for (const auto& cell : rows.front()) doc.table.header.push_back(cell_text(cell));
    const auto arity = doc.table.header.size();
    for (std::size_t r = 1; r < rows.size(); ++r) {
      std::vector<std::string> row;
      for (const auto& cell : rows[r]) row.push_back(cell_text(cell));
      if (row.size() < arity) {
        warn(doc.id + ": table row " + std::to_string(r) + " padded from " + std::to_string(row.size()) +
             " to " + std::to_string(arity) + " cells");
        row.resize(arity);
      } else if (row.size() > arity) {
        warn(doc.id + ": table row " + std::to_string(r) + " truncated from " + std::to_string(row.size()) +
             " to " + std::to_string(arity) + " cells");
        row.resize(arity);
      }
      doc.table.rows.push_back(std::move(row));
    }
  }

  if (doc.pre_text.empty() && doc.post_text.empty() && doc.table.empty()) {
    throw MalformedRecord(doc.id + ": record has no text and no table");
  }

  auto& q = doc.question;
  if (auto it = qa->find("exe_ans"); it != qa->end()) q.gold_exe_answer = exe_answer(*it);
  if (auto it = qa->find("answer"); it != qa->end()) q.gold_answer = scalar_text(*it);
  if (q.gold_answer.empty()) {
    if (auto it = qa->find("exe_ans"); it != qa->end()) q.gold_answer = scalar_text(*it);
    if (q.gold_answer.empty()) {
      warn(doc.id + ": gold answer is empty");
    } else {
      warn(doc.id + ": gold answer taken from exe_ans");
    }
  }
  if (auto it = qa->find("program"); it != qa->end() && it->is_string() && !it->get<std::string>().empty()) {
    q.gold_program = it->get<std::string>();
  }
  if (auto it = qa->find("gold_inds"); it != qa->end()) {
    if (it->is_array()) {
      q.gold_inds = string_array(*it);
    } else if (it->is_object()) {
      for (const auto& [key, value] : it->items()) {
        if (value.is_string()) q.gold_inds.push_back(value.get<std::string>());
      }
    }
  }
  return doc;
}

FinDocument parse_record(std::string_view raw_json, std::vector<std::string>* warnings) {
  json record = json::parse(raw_json, nullptr, /*allow_exceptions=*/false);
  if (record.is_discarded()) throw MalformedRecord("record is not valid JSON");
  return parse_record(record, warnings);
}

LoadedSplit load_split(const std::filesystem::path& path) {
  json root = json::parse(io::read_file(path), nullptr, false);
  if (root.is_discarded() || !root.is_array()) {
    throw MalformedRecord(path.string() + ": expected a JSON array of records");
  }
  LoadedSplit split;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < root.size(); ++i) {
    try {
      auto doc = parse_record(root[i], &split.diagnostics);
      if (!seen.insert(doc.id).second) {
        split.diagnostics.push_back("record " + std::to_string(i) + " skipped: duplicate id " + doc.id);
        continue;
      }
      split.documents.push_back(std::move(doc));
    } catch (const MalformedRecord& e) {
      split.diagnostics.push_back("record " + std::to_string(i) + " skipped: " + e.what());
    }
  }
  return split;
}

std::string template_header(std::string_view header) {
  std::string out;
  std::size_t i = 0;
  while (i < header.size()) {
    if (is_space(static_cast<unsigned char>(header[i]))) {
      out.push_back(header[i++]);
      continue;
    }
    auto end = i;
    while (end < header.size() && !is_space(static_cast<unsigned char>(header[end]))) ++end;
    const auto word = header.substr(i, end - i);
    bool has_lower = false;
    bool has_upper = false;
    for (unsigned char c : word) {
      has_lower |= std::islower(c) != 0;
      has_upper |= std::isupper(c) != 0;
    }
    const bool acronym = has_upper && !has_lower;
    for (unsigned char c : word) out.push_back(acronym ? static_cast<char>(c) : static_cast<char>(std::tolower(c)));
    i = end;
  }
  return out;
}

std::vector<std::string> linearize_table(const Table& table) {
  std::vector<std::string> sentences;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.empty()) continue;
    auto key = collapse_whitespace(row.front());
    if (key.empty()) key = "row " + std::to_string(r + 1);
    for (std::size_t c = 1; c < row.size(); ++c) {
      const auto value = collapse_whitespace(row[c]);
      if (value.empty()) continue;
      auto header = c < table.header.size() ? template_header(collapse_whitespace(table.header[c])) : std::string();
      if (header.empty()) header = "column " + std::to_string(c + 1);
      sentences.push_back("For " + key + ", " + header + " is " + value + ".");
    }
  }
  return sentences;
}

std::string normalize_text(std::string_view text) {
  auto collapsed = collapse_whitespace(text);
  bool ascii = true;
  for (unsigned char c : collapsed) ascii &= c < 0x80;
  if (ascii) return collapsed;

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return collapsed;
  auto source = icu::UnicodeString::fromUTF8(collapsed);
  auto normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) return collapsed;
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::vector<std::string> document_sentences(const FinDocument& doc) {
  std::vector<std::string> out;
  auto push = [&](std::string_view sentence) {
    auto normalized = normalize_text(sentence);
    if (!normalized.empty()) out.push_back(std::move(normalized));
  };
  for (const auto& s : doc.pre_text) push(s);
  for (const auto& s : linearize_table(doc.table)) push(s);
  for (const auto& s : doc.post_text) push(s);
  return out;
}

std::string assemble_text(const FinDocument& doc) {
  std::string text;
  for (const auto& sentence : document_sentences(doc)) {
    if (!text.empty()) text.push_back(' ');
    text += sentence;
  }
  return text;
}

std::string assembled_document_line(const FinDocument& doc) {
  nlohmann::ordered_json line;
  line["id"] = doc.id;
  line["text"] = assemble_text(doc);
  line["n_table_sentences"] = linearize_table(doc.table).size();
  return line.dump();
}

}  // namespace finkg
