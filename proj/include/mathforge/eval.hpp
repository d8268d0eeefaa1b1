#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mathforge/extract.hpp"
#include "mathforge/numeric.hpp"
#include "mathforge/verify.hpp"

namespace mathforge::eval {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Decoding { Greedy, Nucleus };

struct DecodingParams {
  Decoding mode = Decoding::Greedy;
  double top_p = 1.0;
  double temperature = 0.0;
  double repetition_penalty = 1.0;
  int max_tokens = 2048;

  static DecodingParams greedy();
  static DecodingParams nucleus();  // top_p 0.9, temperature 0.7, repetition penalty 1.01
};

struct Shot {
  std::string question;
  std::string rationale;
  std::string answer;
};

/// JSONL of {question, rationale, answer}.
std::vector<Shot> load_shots(const std::filesystem::path& path);

struct EvalConfig {
  DecodingParams decoding = DecodingParams::greedy();
  bool few_shot = false;
  std::vector<Shot> shots;
  bool chat_wrap = false;  // wrap in the vicuna meta prompt for chat models
  extract::ExtractionPatterns patterns = extract::ExtractionPatterns::defaults();
  TolerancePolicy tol;

  /// ConfigError when few-shot has no shots.
  void validate() const;
  nlohmann::json fingerprint_json() const;
};

std::string assemble_eval_prompt(const verify::MathItem& item, const EvalConfig& config);

struct GradedResult {
  std::string item_id;
  std::string prediction;
  std::optional<extract::AnswerValue> extracted;
  bool correct = false;
  verify::ItemMeta facets;
  std::vector<std::string> notes;
};

GradedResult grade_prediction(const verify::MathItem& item, const std::string& prediction, const EvalConfig& config);

enum class Facet { Grade, ReasoningSteps, Digits, DistractorCount };
std::string to_string(Facet f);
Facet parse_facet(const std::string& s);
std::optional<int> facet_value(const verify::ItemMeta& meta, Facet f);

struct FacetRow {
  int value = 0;
  std::int64_t n = 0;
  std::int64_t correct = 0;
  BigRational accuracy() const { return BigRational(correct, n); }
};

struct FacetTable {
  Facet facet;
  std::vector<FacetRow> rows;  // ascending by value
  std::int64_t n() const;
  std::int64_t correct() const;
};

struct Series {
  std::string name;
  std::string x_label;
  std::string y_label;
  std::vector<std::pair<int, BigRational>> points;
};

struct Report {
  std::int64_t n = 0;
  std::int64_t correct = 0;
  std::vector<FacetTable> facets;
  std::vector<Series> series;
  std::string config_fingerprint;

  BigRational pass_at_1() const { return BigRational(correct, n); }
};

Report aggregate_metrics(const std::vector<GradedResult>& graded, const std::vector<Facet>& facets,
                         std::string config_fingerprint = {});

enum class ReportFormat { Json, Csv, PlotData };
ReportFormat parse_report_format(const std::string& s);

/// Fixed 4-decimal rendering, rounded half away from zero, computed exactly.
std::string fixed4(const BigRational& r);

/// File name -> bytes. json: report.json; csv: report.csv; plot-data: one
/// plot_<facet>.csv per facet table.
std::map<std::string, std::string> emit_report(const Report& report, ReportFormat format);

// ---------------------------------------------------------------------------
// Number perturbation

class TemplateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SlotDomain {
  std::string name;
  int scale = 0;  // decimal places; 0 means integer
  std::string lo;
  std::string hi;
};

/// A question whose numbers are named slots: text "... {bill} ...", formula
/// "4 * {bill} - {price}". Slot values are substituted as literals, so the
/// formula evaluates exactly.
class NumberedTemplate {
 public:
  std::string id;
  std::string text;
  std::vector<SlotDomain> slots;
  std::string formula;
  std::vector<std::string> original_values;
  std::optional<std::string> answer_unit;
  bool require_positive = true;
  bool require_integer = false;
  verify::Language language = verify::Language::En;
  verify::ItemMeta meta;

  static NumberedTemplate from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Throws TemplateError unless slots, placeholders and original values agree.
  void validate() const;
  /// sha256 over the literal (non-slot) segments of `text`.
  std::string checksum() const;
  /// Recovers the literal segments of an instantiated question given the
  /// values that were substituted; nullopt when the question does not fit.
  std::optional<std::string> checksum_of(const std::string& question, const std::vector<std::string>& values) const;

  std::string render_question(const std::vector<std::string>& values) const;
  BigRational evaluate(const std::vector<std::string>& values) const;
  verify::MathItem instantiate(const std::vector<std::string>& values, const std::string& item_id) const;

 private:
  struct Piece {
    bool is_slot;
    std::string text;  // literal text or slot name
  };
  std::vector<Piece> pieces() const;
  std::size_t slot_index(const std::string& name) const;
};

inline constexpr int kMaxRejections = 1000;

std::vector<verify::MathItem> perturb_numbers(const NumberedTemplate& tmpl, std::uint64_t seed, int count);

}  // namespace mathforge::eval
