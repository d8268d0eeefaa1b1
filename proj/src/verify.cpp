#include "mathforge/verify.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "mathforge/units.hpp"

namespace mathforge::verify {

std::string to_string(Language l) { return l == Language::Zh ? "zh" : "en"; }

Language parse_language(const std::string& s) {
  if (s == "en") return Language::En;
  if (s == "zh") return Language::Zh;
  throw std::invalid_argument("unknown language '" + s + "'");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::ZeroShot: return "zero-shot";
    case Strategy::ZeroShotCoT: return "zero-shot-CoT";
    case Strategy::FewShotCoT: return "few-shot-CoT";
  }
  return "?";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "zero-shot") return Strategy::ZeroShot;
  if (s == "zero-shot-CoT") return Strategy::ZeroShotCoT;
  if (s == "few-shot-CoT") return Strategy::FewShotCoT;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

std::string to_string(DedupMode m) { return m == DedupMode::KeepAll ? "keep-all" : "by-equation-list"; }

DedupMode parse_dedup_mode(const std::string& s) {
  if (s == "keep-all") return DedupMode::KeepAll;
  if (s == "by-equation-list") return DedupMode::ByEquationList;
  throw std::invalid_argument("unknown dedup mode '" + s + "'");
}

extract::AnswerValue gold_answer(const std::string& value, const std::optional<std::string>& unit) {
  extract::AnswerValue a;
  try {
    a = extract::normalize_answer(value);
  } catch (const extract::NormalizationError&) {
    return extract::token_answer(value);
  }
  if (unit) a.unit = *unit;
  return a;
}

ReasoningPath ReasoningPath::build(std::string id, std::string item_id, std::string text, GenerationInfo gen,
                                   const extract::ExtractionPatterns& patterns) {
  ReasoningPath p;
  p.id = std::move(id);
  p.item_id = std::move(item_id);
  p.text = std::move(text);
  p.gen = std::move(gen);
  extract::EquationScan scan = extract::scan_equations(p.text, patterns);
  p.equations = std::move(scan.equations);
  for (expr::Equation& e : p.equations) e.origin.path_id = p.id;
  p.diagnostics = std::move(scan.diagnostics);
  p.final_answer = extract::extract_final_answer(p.text, patterns);
  return p;
}

bool Verdict::has_indeterminate() const {
  return std::any_of(per_equation.begin(), per_equation.end(),
                     [](const EquationCheck& c) { return c.verdict.truth == expr::Truth::Indeterminate; });
}

bool answer_matches(const MathItem& item, const extract::AnswerValue& extracted, const TolerancePolicy& tol) {
  for (const extract::AnswerValue& gold : item.gold_answers) {
    if (!numeric_equal(extracted.value, gold.value, tol)) continue;
    if (extracted.unit && gold.unit && units::canonical_unit(*extracted.unit) != units::canonical_unit(*gold.unit)) {
      continue;
    }
    return true;
  }
  return false;
}

Verdict verify_response(const MathItem& item, const ReasoningPath& path, const TolerancePolicy& tol) {
  Verdict v;
  for (const expr::Equation& eq : path.equations) {
    EquationCheck c{eq, expr::check_equation(eq, tol)};
    if (c.verdict.truth == expr::Truth::False) {
      v.calc_correct = false;
      v.notes.push_back("calculation error: " + eq.to_string());
    } else if (c.verdict.truth == expr::Truth::Indeterminate) {
      v.notes.push_back("indeterminate: " + eq.to_string() + " (" + c.verdict.reason + ")");
    }
    v.per_equation.push_back(std::move(c));
  }
  v.extracted = path.final_answer;
  if (!v.extracted) {
    v.notes.push_back("no answer extracted");
  } else {
    v.answer_correct = answer_matches(item, *v.extracted, tol);
  }
  return v;
}

bool passes(const MathItem& item, const Verdict& verdict, const FilterPolicy& policy) {
  const bool calc_ok = verdict.calc_correct && !(policy.strict_calc && verdict.has_indeterminate());
  if (item.multi_answer()) return calc_ok;
  return calc_ok && verdict.answer_correct;
}

std::vector<CheckedPath> filter_paths(const MathItem& item, const std::vector<ReasoningPath>& paths,
                                      const FilterPolicy& policy) {
  std::vector<CheckedPath> kept;
  for (const ReasoningPath& p : paths) {
    Verdict v = verify_response(item, p, policy.tol);
    if (passes(item, v, policy)) kept.emplace_back(p, std::move(v));
  }
  return kept;
}

std::string equation_list_key(const ReasoningPath& path) {
  std::string key;
  for (const expr::Equation& eq : path.equations) {
    std::string a = expr::canonical_key(eq.lhs);
    std::string b = expr::canonical_key(eq.rhs);
    if (b < a) std::swap(a, b);
    if (!key.empty()) key += ';';
    key += a + "=" + b;
  }
  return key;
}

std::vector<CheckedPath> dedup_paths(std::vector<CheckedPath> paths, DedupMode mode) {
  if (mode == DedupMode::KeepAll) return paths;
  std::set<std::string> seen;
  std::vector<CheckedPath> out;
  for (CheckedPath& p : paths) {
    if (seen.insert(equation_list_key(p.first)).second) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mathforge::verify
