#include "finkg/evaluator.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "finkg/errors.hpp"
#include "finkg/kg_schema.hpp"

namespace finkg {
namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

// Lowercase with whitespace runs collapsed.
std::string fold(std::string_view s) {
  std::string out;
  bool space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

constexpr std::array<std::pair<std::string_view, ProgramOp>, 10> kOps = {{
    {"add", ProgramOp::Add},
    {"subtract", ProgramOp::Subtract},
    {"multiply", ProgramOp::Multiply},
    {"divide", ProgramOp::Divide},
    {"exp", ProgramOp::Exp},
    {"greater", ProgramOp::Greater},
    {"table_max", ProgramOp::TableMax},
    {"table_min", ProgramOp::TableMin},
    {"table_sum", ProgramOp::TableSum},
    {"table_average", ProgramOp::TableAverage},
}};

std::optional<ProgramOp> op_from_name(std::string_view name) {
  for (const auto& [n, op] : kOps) {
    if (n == name) return op;
  }
  return std::nullopt;
}

bool is_table_op(ProgramOp op) {
  return op == ProgramOp::TableMax || op == ProgramOp::TableMin || op == ProgramOp::TableSum ||
         op == ProgramOp::TableAverage;
}

// Identifier at `pos` followed by '(' that names a known op.
bool op_starts_at(std::string_view text, std::size_t pos) {
  std::size_t end = pos;
  while (end < text.size() && (std::isalpha(static_cast<unsigned char>(text[end])) || text[end] == '_')) ++end;
  return end < text.size() && text[end] == '(' && op_from_name(text.substr(pos, end - pos)).has_value();
}

Operand parse_operand(std::string_view raw) {
  const auto text = trim(raw);
  if (text.empty() || fold(text) == "none") return NoOperand{};
  if (text.front() == '#') {
    const auto digits = text.substr(1);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw ParseError("bad step reference \"" + text + "\"");
    }
    return StepRef{static_cast<std::size_t>(std::stoul(digits))};
  }
  if (text.starts_with("const_")) {
    auto number = text.substr(6);
    bool negative = false;
    if (number.starts_with("m")) {
      negative = true;
      number = number.substr(1);
    }
    const auto d = Decimal::parse(number);
    if (!d) throw ParseError("bad constant \"" + text + "\"");
    return negative ? -d->to_double() : d->to_double();
  }
  std::string_view literal = text;
  bool percent = false;
  if (literal.ends_with("%")) {
    percent = true;
    literal.remove_suffix(1);
  }
  if (auto d = Decimal::parse(literal)) return percent ? d->to_double() / 100.0 : d->to_double();
  return RowRef{text};
}

double operand_value(const Operand& operand, std::span<const double> results) {
  if (const auto* literal = std::get_if<double>(&operand)) return *literal;
  if (const auto* ref = std::get_if<StepRef>(&operand)) {
    if (ref->index >= results.size()) {
      throw BadReference("#" + std::to_string(ref->index) + " refers to a step that has not run");
    }
    return results[ref->index];
  }
  if (const auto* row = std::get_if<RowRef>(&operand)) {
    throw BadReference("row label \"" + row->label + "\" used as an arithmetic operand");
  }
  throw BadReference("missing operand");
}

std::vector<double> row_values(const RowRef& ref, const Table& table) {
  const auto wanted = fold(ref.label);
  for (const auto& row : table.rows) {
    if (row.empty() || fold(row.front()) != wanted) continue;
    std::vector<double> values;
    for (std::size_t c = 1; c < row.size(); ++c) {
      try {
        values.push_back(parse_numeric(row[c]).magnitude.to_double());
      } catch (const NotNumeric&) {
      }
    }
    if (values.empty()) throw RowNotFound("row \"" + ref.label + "\" has no numeric cells");
    return values;
  }
  throw RowNotFound("no table row labelled \"" + ref.label + "\"");
}

std::optional<double> boolean_value(std::string_view text) {
  const auto f = fold(text);
  if (f == "yes" || f == "true") return 1.0;
  if (f == "no" || f == "false") return 0.0;
  return std::nullopt;
}

std::vector<double> candidates(std::string_view text, const JudgeRules& rules) {
  if (auto b = boolean_value(text)) return {*b};
  const auto value = parse_numeric_strict(trim(text));
  if (!value) return {};
  const double face = value->magnitude.to_double();
  std::vector<double> out{face};
  if (rules.unit_scale_bridge) {
    if (const int e = unit_scale_exponent(value->unit); e != 0) out.push_back(value->magnitude.shifted(e).to_double());
  }
  if (rules.percent_decimal_bridge && value->unit.starts_with("percent")) {
    out.push_back(value->magnitude.shifted(-2).to_double());
  }
  return out;
}

// |x - reference| within the relative tolerance of reference.
bool within(double x, double reference, double tol) {
  if (reference == 0.0) return std::abs(x) <= 1e-12;
  return std::abs(x - reference) <= tol * std::abs(reference) * (1.0 + 1e-9);
}

std::string strip_text(std::string_view s) {
  auto f = fold(s);
  while (!f.empty() && (f.back() == '.' || f.back() == ' ')) f.pop_back();
  return f;
}

}  // namespace

std::string_view op_name(ProgramOp op) {
  for (const auto& [n, o] : kOps) {
    if (o == op) return n;
  }
  return "?";
}

std::vector<ProgramStep> parse_program(std::string_view program) {
  std::vector<ProgramStep> steps;
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < program.size() && std::isspace(static_cast<unsigned char>(program[pos]))) ++pos;
  };
  skip_space();
  while (pos < program.size()) {
    const auto open = program.find('(', pos);
    if (open == std::string_view::npos) throw ParseError("expected '(' in program at offset " + std::to_string(pos));
    const auto name = trim(program.substr(pos, open - pos));
    const auto op = op_from_name(name);
    if (!op) throw ParseError("unknown operation \"" + name + "\"");

    // The step ends at a ')' followed by end of text or ", <op>(".
    std::size_t close = std::string_view::npos;
    for (auto p = program.find(')', open); p != std::string_view::npos; p = program.find(')', p + 1)) {
      auto after = p + 1;
      while (after < program.size() && std::isspace(static_cast<unsigned char>(program[after]))) ++after;
      if (after == program.size()) {
        close = p;
        break;
      }
      if (program[after] == ',') {
        ++after;
        while (after < program.size() && std::isspace(static_cast<unsigned char>(program[after]))) ++after;
        if (op_starts_at(program, after)) {
          close = p;
          break;
        }
      }
    }
    if (close == std::string_view::npos) throw ParseError("unterminated step \"" + name + "\"");

    const auto args = program.substr(open + 1, close - open - 1);
    const auto comma = args.rfind(',');
    if (comma == std::string_view::npos) throw ParseError(name + " expects two arguments");
    steps.push_back({*op, parse_operand(args.substr(0, comma)), parse_operand(args.substr(comma + 1))});

    pos = close + 1;
    skip_space();
    if (pos < program.size()) {
      if (program[pos] != ',') throw ParseError("expected ',' between steps");
      ++pos;
      skip_space();
    }
  }
  if (steps.empty()) throw ParseError("empty program");
  return steps;
}

double execute_program(std::span<const ProgramStep> steps, const Table& table) {
  if (steps.empty()) throw BadReference("empty program");
  std::vector<double> results;
  results.reserve(steps.size());
  for (const auto& step : steps) {
    double value = 0.0;
    if (is_table_op(step.op)) {
      const auto* row = std::get_if<RowRef>(&step.lhs);
      if (row == nullptr) throw BadReference(std::string(op_name(step.op)) + " needs a row label");
      const auto values = row_values(*row, table);
      switch (step.op) {
        case ProgramOp::TableMax: value = *std::max_element(values.begin(), values.end()); break;
        case ProgramOp::TableMin: value = *std::min_element(values.begin(), values.end()); break;
        case ProgramOp::TableSum:
        case ProgramOp::TableAverage:
          value = 0.0;
          for (double v : values) value += v;
          if (step.op == ProgramOp::TableAverage) value /= static_cast<double>(values.size());
          break;
        default: break;
      }
    } else {
      const double a = operand_value(step.lhs, results);
      const double b = operand_value(step.rhs, results);
      switch (step.op) {
        case ProgramOp::Add: value = a + b; break;
        case ProgramOp::Subtract: value = a - b; break;
        case ProgramOp::Multiply: value = a * b; break;
        case ProgramOp::Divide:
          if (b == 0.0) throw DivideByZero("division by zero in step " + std::to_string(results.size()));
          value = a / b;
          break;
        case ProgramOp::Exp: value = std::pow(a, b); break;
        case ProgramOp::Greater: value = a > b ? 1.0 : 0.0; break;
        default: break;
      }
    }
    results.push_back(value);
  }
  return results.back();
}

double execute_program(std::string_view program, const Table& table) {
  const auto steps = parse_program(program);
  return execute_program(steps, table);
}

// ------------------------------------------------------------------ judge

bool numbers_equivalent(std::string_view pred, std::string_view gold, const JudgeRules& rules) {
  if (strip_text(pred) == strip_text(gold)) return true;
  const auto p = candidates(pred, rules);
  const auto g = candidates(gold, rules);
  for (double a : p) {
    for (double b : g) {
      if (within(a, b, rules.rounding_rel_tol) || within(b, a, rules.rounding_rel_tol)) return true;
    }
  }
  return false;
}

LlmJudge::LlmJudge(LlmConfig cfg, std::shared_ptr<ResponseCache> cache)
    : client_([&] {
        cfg.temperature = 0.0;
        return cfg;
      }(),
              std::move(cache)) {}

std::string LlmJudge::build_prompt(std::string_view pred, std::string_view gold) {
  std::string prompt =
      "You grade answers to numerical questions about financial reports.\n"
      "Decide whether the predicted answer means the same as the gold answer.\n"
      "Count them as equivalent when they differ only by:\n"
      "- number format, such as a percentage versus a decimal fraction (15% and 0.15)\n"
      "- rounding of at most 1% of the gold value\n"
      "- units or scale words ($2.5M and $2,500,000)\n"
      "- wording that states the same quantity (\"a 15% rise\" and \"went up by 15%\")\n"
      "Anything else is not equivalent.\n\n";
  prompt += "Predicted answer: ";
  prompt += pred;
  prompt += "\nGold answer: ";
  prompt += gold;
  prompt += "\n\nReply with exactly one word: YES or NO.\n";
  return prompt;
}

bool LlmJudge::judge(std::string_view pred, std::string_view gold) {
  std::string reply;
  try {
    reply = client_.complete(build_prompt(pred, gold)).content;
  } catch (const Error& e) {
    throw JudgeError(std::string("judge unavailable: ") + e.what());
  }
  std::string word;
  for (char c : reply) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!word.empty()) {
      break;
    }
  }
  if (word == "yes") return true;
  if (word == "no") return false;
  throw JudgeError("unreadable judge verdict: \"" + reply.substr(0, 80) + "\"");
}

bool judge_with_llm(std::string_view pred, std::string_view gold, const LlmConfig& cfg) {
  LlmJudge judge(cfg);
  return judge.judge(pred, gold);
}

// ------------------------------------------------------------- evaluation

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Correct: return "CORRECT";
    case Verdict::Incorrect: return "INCORRECT";
    case Verdict::JudgeError: return "JUDGE_ERROR";
  }
  return "INCORRECT";
}

std::string_view judge_used_name(JudgeUsed j) { return j == JudgeUsed::Llm ? "LLM" : "RULES"; }

EvalSummary evaluate_split(std::span<const EvalInput> inputs, const JudgeRules& rules, LlmJudge* llm_judge) {
  if (inputs.empty()) throw EmptyInput("no records to evaluate");
  EvalSummary summary;
  for (const auto& in : inputs) {
    EvalRecord record{in.doc_id, in.predicted, in.gold, in.gold_exe, Verdict::Incorrect, JudgeUsed::Rules};
    const auto& pred = in.predicted.answer_text;
    if (!in.prediction_failed && !trim(pred).empty()) {
      bool ok = numbers_equivalent(pred, in.gold, rules);
      if (!ok && in.gold_exe) ok = numbers_equivalent(pred, in.gold_exe->to_string(), rules);
      if (ok) {
        record.verdict = Verdict::Correct;
      } else if (llm_judge != nullptr && in.predicted.kind == AnswerKind::Text) {
        record.judge_used = JudgeUsed::Llm;
        try {
          record.verdict = llm_judge->judge(pred, in.gold) ? Verdict::Correct : Verdict::Incorrect;
        } catch (const JudgeError&) {
          record.verdict = Verdict::JudgeError;
        }
      }
    }
    if (record.verdict == Verdict::Correct) ++summary.correct;
    summary.records.push_back(std::move(record));
  }
  summary.accuracy = static_cast<double>(summary.correct) / static_cast<double>(inputs.size());
  return summary;
}

std::string verdicts_jsonl(const EvalSummary& summary) {
  std::string out;
  for (const auto& r : summary.records) {
    nlohmann::ordered_json j;
    j["doc_id"] = r.doc_id;
    j["predicted"] = r.predicted.answer_text;
    j["gold"] = r.gold;
    j["verdict"] = verdict_name(r.verdict);
    j["judge_used"] = judge_used_name(r.judge_used);
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

// -------------------------------------------------------------- reporting

RunComparison compare_runs(double baseline_acc, double treatment_acc) {
  if (baseline_acc == 0.0) throw ZeroBaseline("baseline accuracy is zero; relative change undefined");
  return {treatment_acc - baseline_acc, 100.0 * (treatment_acc - baseline_acc) / baseline_acc};
}

std::string format_report(double baseline_acc, double treatment_acc, std::string_view baseline_label,
                          std::string_view treatment_label) {
  const auto delta = compare_runs(baseline_acc, treatment_acc);
  const auto width = std::max<std::size_t>({baseline_label.size(), treatment_label.size(), 6});
  auto pad = [width](std::string_view s) { return std::string(s) + std::string(width - s.size(), ' '); };
  char buffer[64];
  std::string out;
  out += "| " + pad("Method") + " | Acc. (%) |\n";
  out += "|" + std::string(width + 2, '-') + "|----------|\n";
  std::snprintf(buffer, sizeof buffer, "%8.2f", baseline_acc);
  out += "| " + pad(baseline_label) + " | " + buffer + " |\n";
  std::snprintf(buffer, sizeof buffer, "%8.2f", treatment_acc);
  out += "| " + pad(treatment_label) + " | " + buffer + " |\n\n";
  std::snprintf(buffer, sizeof buffer, "%+.2f", delta.absolute_pp);
  out += std::string("Absolute improvement: ") + buffer + " pp\n";
  std::snprintf(buffer, sizeof buffer, "%+.2f", delta.relative_pct);
  out += std::string("Relative improvement: ") + buffer + "%\n";
  return out;
}

}  // namespace finkg
