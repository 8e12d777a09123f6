#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "finkg/decimal.hpp"
#include "finkg/llm_client.hpp"
#include "finkg/preprocess.hpp"
#include "finkg/reasoner.hpp"

namespace finkg {

// ------------------------------------------------------- program executor

enum class ProgramOp {
  Add, Subtract, Multiply, Divide, Exp, Greater,
  TableMax, TableMin, TableSum, TableAverage,
};

struct StepRef {
  std::size_t index = 0;
  friend bool operator==(const StepRef&, const StepRef&) = default;
};

struct RowRef {
  std::string label;
  friend bool operator==(const RowRef&, const RowRef&) = default;
};

struct NoOperand {
  friend bool operator==(const NoOperand&, const NoOperand&) = default;
};

using Operand = std::variant<double, StepRef, RowRef, NoOperand>;

struct ProgramStep {
  ProgramOp op = ProgramOp::Add;
  Operand lhs;
  Operand rhs;
};

std::string_view op_name(ProgramOp op);

/// Parses FinQA program text, e.g. "subtract(120, 100), divide(#0, 100)".
/// Literals may carry a trailing "%" (divided by 100); const_N and const_mN
/// name constants; "none" is an empty operand; anything else is a row label.
/// Throws ParseError.
std::vector<ProgramStep> parse_program(std::string_view program);

/// Evaluates steps in order and returns the last value. greater yields 1/0,
/// exp is power, table_* aggregate the numeric cells of the row whose key
/// matches the label after case and whitespace folding. Throws DivideByZero,
/// BadReference, RowNotFound.
double execute_program(std::span<const ProgramStep> steps, const Table& table = {});
double execute_program(std::string_view program, const Table& table = {});

// ------------------------------------------------------------------ judge

struct JudgeRules {
  double rounding_rel_tol = 0.01;
  bool percent_decimal_bridge = true;
  bool unit_scale_bridge = true;
};

/// Deterministic answer equivalence. Numbers match when they agree within
/// `rounding_rel_tol` relative to either side, after expanding K/M/B scale
/// words and trying x% <-> x/100. yes/no match 1/0. Other text compares
/// case-insensitively. Reflexive and symmetric.
bool numbers_equivalent(std::string_view pred, std::string_view gold, const JudgeRules& rules = {});

/// Asks a chat model (temperature forced to 0.0) whether two answers agree.
class LlmJudge {
 public:
  explicit LlmJudge(LlmConfig cfg, std::shared_ptr<ResponseCache> cache = nullptr);

  /// Throws JudgeError on transport failure or an unreadable verdict.
  bool judge(std::string_view pred, std::string_view gold);

  static std::string build_prompt(std::string_view pred, std::string_view gold);
  const ChatClient& client() const { return client_; }

 private:
  ChatClient client_;
};

bool judge_with_llm(std::string_view pred, std::string_view gold, const LlmConfig& cfg);

// ------------------------------------------------------------- evaluation

enum class Verdict { Correct, Incorrect, JudgeError };
enum class JudgeUsed { Rules, Llm };

std::string_view verdict_name(Verdict v);
std::string_view judge_used_name(JudgeUsed j);

struct EvalInput {
  std::string doc_id;
  Answer predicted;
  std::string gold;
  std::optional<Decimal> gold_exe;
  bool prediction_failed = false;  // reasoner errored; always INCORRECT
};

struct EvalRecord {
  std::string doc_id;
  Answer predicted;
  std::string gold;
  std::optional<Decimal> gold_exe;
  Verdict verdict = Verdict::Incorrect;
  JudgeUsed judge_used = JudgeUsed::Rules;
};

struct EvalSummary {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::vector<EvalRecord> records;
};

/// Rules judge first; the optional LLM judge only sees TEXT predictions the
/// rules rejected. JUDGE_ERROR counts as incorrect. Throws EmptyInput.
EvalSummary evaluate_split(std::span<const EvalInput> inputs, const JudgeRules& rules = {},
                           LlmJudge* llm_judge = nullptr);

/// {doc_id, predicted, gold, verdict, judge_used} per line.
std::string verdicts_jsonl(const EvalSummary& summary);

// -------------------------------------------------------------- reporting

struct RunComparison {
  double absolute_pp = 0.0;
  double relative_pct = 0.0;
};

/// Accuracies in percent. Throws ZeroBaseline.
RunComparison compare_runs(double baseline_acc, double treatment_acc);

std::string format_report(double baseline_acc, double treatment_acc,
                          std::string_view baseline_label = "Llama (vanilla)",
                          std::string_view treatment_label = "Llama + KG");

}  // namespace finkg
