#pragma once

#include <filesystem>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mathforge/expr.hpp"
#include "mathforge/numeric.hpp"

namespace mathforge::extract {

enum class PatternKind {
  Answer,          // searched on every line
  LastLineAnswer,  // searched on the last non-empty line only
  CalcAnnotation,  // inline calculator markup such as <<20*4=80>>
};

struct AnswerPattern {
  std::string lang;  // "en", "zh" or "any"; all tiers run on every text
  PatternKind kind = PatternKind::Answer;
  std::string pattern;
  int priority = 0;
};

class PatternError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered answer-marker tiers plus the equation scanner settings. Each
/// pattern has exactly one capture group, holding the answer (or, for
/// calculator annotations, the inner equation).
class ExtractionPatterns {
 public:
  /// Throws PatternError on an empty tier list, a bad regex, or a capture
  /// count other than one.
  ExtractionPatterns(std::vector<AnswerPattern> patterns, bool split_chains = true);

  static ExtractionPatterns defaults();
  static ExtractionPatterns from_json(const nlohmann::json& j);
  static ExtractionPatterns load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  struct Tier {
    AnswerPattern pattern;
    std::regex re;
  };

  /// Answer tiers sorted by ascending priority (stable for ties).
  const std::vector<Tier>& answer_tiers() const { return tiers_; }
  const std::optional<std::regex>& calc_annotation() const { return calc_; }
  bool split_chains() const { return split_chains_; }

 private:
  std::vector<AnswerPattern> patterns_;
  std::vector<Tier> tiers_;
  std::optional<std::regex> calc_;
  bool split_chains_ = true;
};

/// An extracted or gold answer: numeric value plus an optional unit.
struct AnswerValue {
  NumericValue value;
  std::optional<std::string> unit;
  std::string raw;
};

class NormalizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "$3,450" -> 3450 unit "$"; "3.6元" -> 18/5 unit "元"; "50%" -> 50 unit "%";
/// "3/4" -> 3/4. Throws NormalizationError when no numeral is present.
AnswerValue normalize_answer(std::string_view raw);

/// A non-numeric answer kept verbatim.
AnswerValue token_answer(std::string_view raw);

struct Diagnostic {
  expr::Span span;
  std::string message;
};

struct EquationScan {
  std::vector<expr::Equation> equations;
  std::vector<Diagnostic> diagnostics;
};

/// All complete equations in document order. Chains are split pairwise;
/// sides that are incomplete, contain variables, or fail to parse are
/// skipped and reported in diagnostics.
EquationScan scan_equations(std::string_view text, const ExtractionPatterns& patterns);

std::vector<expr::Equation> extract_equations(std::string_view text,
                                              const ExtractionPatterns& patterns);

/// Highest-priority tier with any match wins; within a tier the last match
/// in the text wins.
std::optional<AnswerValue> extract_final_answer(std::string_view text,
                                                const ExtractionPatterns& patterns);

}  // namespace mathforge::extract
