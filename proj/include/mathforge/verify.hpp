#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mathforge/expr.hpp"
#include "mathforge/extract.hpp"
#include "mathforge/numeric.hpp"

namespace mathforge::verify {

enum class Language { En, Zh };
std::string to_string(Language l);
Language parse_language(const std::string& s);

struct ItemMeta {
  std::optional<int> grade;
  std::optional<int> reasoning_steps;
  std::optional<int> digits;
  std::optional<int> distractor_count;
};

struct TemplateRef {
  std::string template_id;
  std::vector<std::string> slot_values;
};

struct MathItem {
  std::string id;
  std::string question;
  std::vector<extract::AnswerValue> gold_answers;  // more than one: any of them is accepted
  Language language = Language::En;
  ItemMeta meta;
  std::optional<TemplateRef> template_ref;

  bool multi_answer() const { return gold_answers.size() > 1; }
};

/// Gold answers may be non-numeric (e.g. a derivative); those are kept as tokens.
extract::AnswerValue gold_answer(const std::string& value, const std::optional<std::string>& unit);

enum class Strategy { ZeroShot, ZeroShotCoT, FewShotCoT };
std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

struct GenerationInfo {
  std::string model_id;
  Strategy strategy = Strategy::ZeroShotCoT;
  double temperature = 0.7;
  std::string prompt_id;
};

struct ReasoningPath {
  std::string id;
  std::string item_id;
  std::string text;
  std::vector<expr::Equation> equations;
  std::optional<extract::AnswerValue> final_answer;
  GenerationInfo gen;
  std::vector<extract::Diagnostic> diagnostics;

  /// Runs extraction over `text`; equations carry `id` as their origin path.
  static ReasoningPath build(std::string id, std::string item_id, std::string text, GenerationInfo gen,
                             const extract::ExtractionPatterns& patterns);
};

struct EquationCheck {
  expr::Equation equation;
  expr::EquationVerdict verdict;
};

struct Verdict {
  bool answer_correct = false;
  bool calc_correct = true;
  std::vector<EquationCheck> per_equation;
  std::optional<extract::AnswerValue> extracted;
  std::vector<std::string> notes;

  bool has_indeterminate() const;
};

/// True when `extracted` matches some gold answer. Units only matter when
/// both sides carry one.
bool answer_matches(const MathItem& item, const extract::AnswerValue& extracted, const TolerancePolicy& tol);

Verdict verify_response(const MathItem& item, const ReasoningPath& path, const TolerancePolicy& tol);

struct FilterPolicy {
  bool strict_calc = false;  // indeterminate equations fail the path
  TolerancePolicy tol;
};

/// Single-answer items need a correct answer and clean calculations;
/// multi-answer items only the calculations.
bool passes(const MathItem& item, const Verdict& verdict, const FilterPolicy& policy);

using CheckedPath = std::pair<ReasoningPath, Verdict>;

std::vector<CheckedPath> filter_paths(const MathItem& item, const std::vector<ReasoningPath>& paths,
                                      const FilterPolicy& policy);

enum class DedupMode { KeepAll, ByEquationList };
std::string to_string(DedupMode m);
DedupMode parse_dedup_mode(const std::string& s);

/// Order-sensitive list of equations, each with its two sides canonicalized
/// and sorted so 4*20=80 and 80=20*4 collide.
std::string equation_list_key(const ReasoningPath& path);

std::vector<CheckedPath> dedup_paths(std::vector<CheckedPath> paths, DedupMode mode);

}  // namespace mathforge::verify
