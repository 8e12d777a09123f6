#include "finkg/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_set>

#include "finkg/errors.hpp"
#include "finkg/io.hpp"

namespace finkg {
namespace {

using nlohmann::json;

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::optional<std::string> string_field(const json& obj, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = obj.find(key);
    if (it == obj.end()) continue;
    if (it->is_string()) {
      auto s = trimmed(it->get<std::string>());
      if (!s.empty()) return s;
    } else if (it->is_number()) {
      return Decimal::from_double(it->get<double>()).to_string();
    }
  }
  return std::nullopt;
}

bool is_null_word(const std::string& s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "null" || lower == "none" || lower == "n/a" || lower == "unknown";
}

// Maps one extracted object onto a schema triplet; invalid content throws.
Triplet map_element(const json& element, const std::string& doc_id, std::span<const int> context_years) {
  if (!element.is_object()) throw ParseError("element is not an object");

  const auto subject = string_field(element, {"subject"});
  auto metric_raw = string_field(element, {"financial_metric_entity_type", "metric_type", "financial_metric_type"});
  if (!metric_raw && subject) metric_raw = subject->substr(0, subject->find(':'));
  if (!metric_raw) throw ParseError("no metric");
  auto metric = canonical_metric(*metric_raw);

  std::optional<std::string> company = string_field(element, {"company"});
  if (!company && subject) {
    if (const auto colon = subject->find(':'); colon != std::string::npos) company = trimmed(subject->substr(colon + 1));
  }
  if (company && (company->empty() || is_null_word(*company))) company.reset();

  Period period;
  if (auto p = string_field(element, {"period"})) period = normalize_period(*p, context_years);
  if (period.kind == PeriodKind::Unknown) {
    if (auto relation = string_field(element, {"relation"})) {
      std::string_view rest = *relation;
      for (std::string_view prefix : {"HAS_VALUE_IN_", "HAS_VALUE_"}) {
        if (rest.starts_with(prefix)) {
          rest.remove_prefix(prefix.size());
          break;
        }
      }
      period = normalize_period(rest, context_years);
    }
  }

  const auto object = string_field(element, {"object"});
  const auto value_text = string_field(element, {"value"});
  NormalizedValue value;
  if (value_text) {
    value = parse_numeric(*value_text);
  } else if (object) {
    value = parse_numeric(*object);
  } else {
    throw NotNumeric("no value");
  }
  if (auto unit = string_field(element, {"unit"})) {
    if (!is_null_word(*unit)) value.unit = *unit;
  }
  {
    std::string collapsed;
    std::istringstream words(value.unit);
    for (std::string w; words >> w;) collapsed += (collapsed.empty() ? "" : " ") + w;
    value.unit = collapsed;
  }

  auto t = make_triplet(std::move(metric), std::move(company), period, value, doc_id);
  if (object) {
    // Keep the model's object unless it is the same quantity written
    // differently, in which case use the canonical rendering.
    bool same_quantity = false;
    try {
      same_quantity = parse_numeric(*object).magnitude == value.magnitude;
    } catch (const NotNumeric&) {
    }
    if (!same_quantity) {
      t.object = *object;
      refresh_triplet_id(t);
    }
  }
  return t;
}

std::vector<int> years_in(std::span<const std::string> sentences) {
  std::vector<int> years;
  for (const auto& s : sentences) {
    for (int y : find_years(s)) years.push_back(y);
  }
  return years;
}

}  // namespace

// ------------------------------------------------------------------ asset

PromptAsset PromptAsset::from_json(const json& j) {
  PromptAsset asset;
  asset.version = j.value("version", "");
  if (auto it = j.find("rules"); it != j.end() && it->is_array()) {
    for (const auto& line : *it) {
      if (line.is_string()) asset.rules.push_back(line.get<std::string>());
    }
  }
  asset.output_format = j.value("output_format", "");
  if (auto it = j.find("examples"); it != j.end() && it->is_array()) {
    for (const auto& ex : *it) {
      Example e;
      e.input = ex.value("input", "");
      const auto& out = ex.contains("output") ? ex["output"] : json();
      e.output = out.is_string() ? out.get<std::string>() : out.dump();
      asset.examples.push_back(std::move(e));
    }
  }
  const bool has_rules = std::any_of(asset.rules.begin(), asset.rules.end(),
                                     [](const std::string& r) { return !trimmed(r).empty(); });
  if (!has_rules) throw ConfigError("extraction prompt asset has no rules");
  return asset;
}

PromptAsset PromptAsset::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot read prompt asset: ") + e.what());
  }
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("prompt asset is not a JSON object: " + path.string());
  return from_json(j);
}

std::filesystem::path default_prompt_asset_path() {
  return std::filesystem::path(FINKG_ASSET_DIR) / "extraction_prompt.json";
}

std::string build_extraction_prompt(const PromptAsset& asset, std::string_view doc_text) {
  std::string prompt;
  for (const auto& line : asset.rules) {
    prompt += line;
    prompt.push_back('\n');
  }
  if (!asset.output_format.empty()) {
    prompt += "\nOUTPUT FORMAT:\n" + asset.output_format + "\n";
  }
  for (std::size_t i = 0; i < asset.examples.size(); ++i) {
    prompt += "\nExample " + std::to_string(i + 1) + ":\nInput: " + asset.examples[i].input +
              "\nOutput: " + asset.examples[i].output + "\n";
  }
  prompt += "\nDocument:\n";
  prompt += doc_text;
  prompt += "\n\nOutput:";
  return prompt;
}

// ---------------------------------------------------------------- parsing

std::optional<std::string_view> find_first_json_array(std::string_view raw) {
  for (std::size_t open = raw.find('['); open != std::string_view::npos; open = raw.find('[', open + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t close = std::string_view::npos;
    for (std::size_t i = open; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '[' || c == '{') {
        ++depth;
      } else if (c == ']' || c == '}') {
        if (--depth == 0) {
          close = i;
          break;
        }
        if (depth < 0) break;
      }
    }
    if (close == std::string_view::npos || raw[close] != ']') continue;
    auto candidate = raw.substr(open, close - open + 1);
    if (json::accept(candidate)) return candidate;
  }
  return std::nullopt;
}

ExtractionResult parse_extraction_response(std::string_view raw, const std::string& doc_id,
                                           std::span<const int> context_years) {
  const auto array_text = find_first_json_array(raw);
  if (!array_text) throw NoJsonFound(doc_id + ": no JSON array in response");
  const auto array = json::parse(*array_text);

  ExtractionResult result;
  result.doc_id = doc_id;
  result.raw_response = std::string(raw);
  std::unordered_set<std::string> seen;
  for (const auto& element : array) {
    try {
      auto t = map_element(element, doc_id, context_years);
      const auto violations = validate_triplet(t);
      if (!violations.empty()) {
        RejectedFragment r{element.dump(), {}};
        for (auto v : violations) r.violations.emplace_back(violation_name(v));
        result.rejected.push_back(std::move(r));
        continue;
      }
      if (seen.insert(t.triplet_id).second) result.triplets.push_back(std::move(t));
    } catch (const Error& e) {
      result.rejected.push_back({element.dump(), {e.kind()}});
    } catch (const std::exception& e) {
      result.rejected.push_back({element.dump(), {"MalformedElement"}});
    }
  }
  return result;
}

// ----------------------------------------------------------- table route

std::vector<Triplet> extract_table_triplets(const FinDocument& doc) {
  const auto& table = doc.table;
  std::vector<int> context;
  for (const auto& h : table.header) {
    for (int y : find_years(h)) context.push_back(y);
  }
  for (const auto& row : table.rows) {
    if (!row.empty()) {
      for (int y : find_years(row.front())) context.push_back(y);
    }
  }

  std::vector<Triplet> out;
  std::unordered_set<std::string> seen;
  for (const auto& row : table.rows) {
    if (row.empty()) continue;
    const auto& key = row.front();
    const auto key_period = normalize_period(key, context);
    for (std::size_t c = 1; c < row.size() && c < table.header.size(); ++c) {
      const auto& cell = row[c];
      if (std::none_of(cell.begin(), cell.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) continue;
      NormalizedValue value;
      try {
        value = parse_numeric(cell);
      } catch (const NotNumeric&) {
        continue;
      }
      std::string_view metric_raw = table.header[c];
      Period period = key_period;
      if (key_period.kind == PeriodKind::Unknown) {
        const auto header_period = normalize_period(table.header[c], context);
        if (header_period.kind != PeriodKind::Unknown) {
          metric_raw = key;
          period = header_period;
        }
      }
      std::string metric;
      try {
        metric = canonical_metric(metric_raw);
      } catch (const EmptyAfterNormalization&) {
        continue;
      }
      auto t = make_triplet(std::move(metric), std::nullopt, period, value, doc.id);
      if (!validate_triplet(t).empty()) continue;
      if (seen.insert(t.triplet_id).second) out.push_back(std::move(t));
    }
  }
  return out;
}

// --------------------------------------------------------------- chunking

std::vector<std::vector<std::string>> chunk_sentences(std::span<const std::string> sentences,
                                                      std::size_t budget_chars, std::size_t overlap) {
  std::vector<std::vector<std::string>> chunks;
  std::size_t start = 0;
  while (start < sentences.size()) {
    std::size_t end = start;
    std::size_t length = 0;
    while (end < sentences.size()) {
      const auto add = sentences[end].size() + (end > start ? 1 : 0);
      if (end > start && length + add > budget_chars) break;
      length += add;
      ++end;
    }
    chunks.emplace_back(sentences.begin() + static_cast<std::ptrdiff_t>(start),
                        sentences.begin() + static_cast<std::ptrdiff_t>(end));
    if (end >= sentences.size()) break;
    const auto taken = end - start;
    start = taken > overlap ? end - overlap : end;
  }
  return chunks;
}

// -------------------------------------------------------------- extractor

LlmExtractor::LlmExtractor(ChatClient& client, PromptAsset asset, ExtractionOptions options)
    : client_(client), asset_(std::move(asset)), options_(options) {}

ExtractionResult LlmExtractor::extract(const FinDocument& doc) {
  ExtractionResult result;
  result.doc_id = doc.id;
  const auto sentences = document_sentences(doc);
  const auto years = years_in(sentences);
  bool all_cached = true;
  std::vector<std::string> responses;
  for (const auto& chunk : chunk_sentences(sentences, options_.chunk_budget_chars, options_.chunk_overlap_sentences)) {
    extract_chunk(chunk, years, result, all_cached, responses);
  }
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (i > 0) result.raw_response += "\n";
    result.raw_response += responses[i];
  }
  result.from_cache = all_cached && !responses.empty();
  return result;
}

void LlmExtractor::extract_chunk(std::span<const std::string> sentences, std::span<const int> years,
                                 ExtractionResult& out, bool& all_cached, std::vector<std::string>& responses) {
  std::string text;
  for (const auto& s : sentences) {
    if (!text.empty()) text.push_back(' ');
    text += s;
  }
  ChatReply reply;
  try {
    reply = client_.complete(build_extraction_prompt(asset_, text));
  } catch (const LlmTruncated&) {
    if (sentences.size() > 1) {
      const auto half = sentences.size() / 2;
      extract_chunk(sentences.first(half), years, out, all_cached, responses);
      extract_chunk(sentences.subspan(half), years, out, all_cached, responses);
    } else {
      out.rejected.push_back({text, {"LlmTruncated"}});
      all_cached = false;
    }
    return;
  }
  all_cached = all_cached && reply.from_cache;
  responses.push_back(reply.content);
  try {
    auto partial = parse_extraction_response(reply.content, out.doc_id, years);
    std::unordered_set<std::string> seen;
    for (const auto& t : out.triplets) seen.insert(t.triplet_id);
    for (auto& t : partial.triplets) {
      if (seen.insert(t.triplet_id).second) out.triplets.push_back(std::move(t));
    }
    for (auto& r : partial.rejected) out.rejected.push_back(std::move(r));
  } catch (const NoJsonFound&) {
    out.rejected.push_back({reply.content, {"NoJsonFound"}});
  }
}

}  // namespace finkg
