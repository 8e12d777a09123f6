#include "finkg/reasoner.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "finkg/io.hpp"

namespace finkg {
namespace {

constexpr std::string_view kInstructions =
    "You are a financial analyst answering a numerical question about a company report.\n"
    "Use only the information given below. Work through the calculation step by step,\n"
    "then finish with a final line of the form:\n"
    "ANSWER: <value>\n"
    "Write the value as a number (add % for percentages) or as yes/no for comparison questions.\n";

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string clean_answer(std::string text) {
  text = trim(text);
  auto strip = [&](std::string_view chars) {
    while (!text.empty() && chars.find(text.back()) != std::string_view::npos) text.pop_back();
    while (!text.empty() && chars.find(text.front()) != std::string_view::npos) text.erase(text.begin());
  };
  strip("*_`\"' ");
  while (!text.empty() && (text.back() == '.' || text.back() == ' ')) text.pop_back();
  strip("*_`\"' ");
  return text;
}

std::optional<bool> as_boolean(const std::string& text) {
  std::string word;
  for (char c : text) {
    if (!std::isalpha(static_cast<unsigned char>(c))) break;
    word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  // "yes", "No.", "yes, because ..." but not "not", "nothing" or "no 5".
  if (word.size() < text.size()) {
    const char next = text[word.size()];
    if (next != ',' && next != ';' && next != '.' && next != '!' && next != ' ') return std::nullopt;
    if (next == ' ' && word.size() + 1 < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[word.size() + 1]))) {
      return std::nullopt;
    }
  }
  if (word == "yes") return true;
  if (word == "no") return false;
  return std::nullopt;
}

}  // namespace

std::string_view answer_kind_name(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::Numeric: return "NUMERIC";
    case AnswerKind::Boolean: return "BOOLEAN";
    case AnswerKind::Text: return "TEXT";
  }
  return "TEXT";
}

std::string render_fact(const Triplet& t) {
  return t.subject + " " + t.relation + " " + t.object + " (" + t.period.canonical() + ")";
}

std::string build_reasoning_prompt(std::string_view question, std::span<const Triplet> triplets) {
  std::string prompt(kInstructions);
  prompt += "\nFacts:\n";
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    prompt += std::to_string(i + 1) + ". " + render_fact(triplets[i]) + "\n";
  }
  prompt += "\nQuestion: ";
  prompt += question;
  prompt += "\n";
  return prompt;
}

std::string build_document_prompt(std::string_view question, std::string_view document_text) {
  std::string prompt(kInstructions);
  prompt += "\nDocument:\n";
  prompt += document_text;
  prompt += "\n\nQuestion: ";
  prompt += question;
  prompt += "\n";
  return prompt;
}

Answer parse_answer(std::string_view reply) {
  static const std::regex marker(R"(^[\s*#>_-]*answer\s*[*_]*\s*:\s*(.*)$)", std::regex::icase);
  Answer answer;
  answer.raw_text = std::string(reply);

  std::string chosen;
  std::string last_non_empty;
  for (const auto& line : io::split_lines(reply)) {
    std::smatch m;
    if (std::regex_match(line, m, marker)) {
      chosen = m[1].str();
      answer.marker_found = true;
    }
    if (!trim(line).empty()) last_non_empty = line;
  }
  if (!answer.marker_found) chosen = last_non_empty;
  answer.answer_text = clean_answer(chosen);

  if (as_boolean(answer.answer_text)) {
    answer.kind = AnswerKind::Boolean;
  } else if (auto value = parse_numeric_strict(answer.answer_text)) {
    answer.kind = AnswerKind::Numeric;
    answer.parsed_value = std::move(value);
  }
  return answer;
}

Answer answer_question(std::string_view question, std::span<const Triplet> triplets, ChatClient& client) {
  return parse_answer(client.complete(build_reasoning_prompt(question, triplets)).content);
}

Answer answer_from_document(std::string_view question, std::string_view document_text, ChatClient& client) {
  return parse_answer(client.complete(build_document_prompt(question, document_text)).content);
}

}  // namespace finkg
