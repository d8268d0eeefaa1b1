#pragma once

#include <string>

#include "json.hpp"
#include "mathforge/augment/augment.hpp"
#include "mathforge/eval.hpp"
#include "mathforge/io.hpp"
#include "mathforge/prefs.hpp"
#include "mathforge/verify.hpp"

// JSONL record shapes. Readers throw io::SchemaError carrying file and line.
namespace mathforge::schema {

struct Where {
  std::string file;
  std::size_t line = 0;
};

nlohmann::json answer_to_json(const extract::AnswerValue& a);

/// {id, question, gold_answers:[{value, unit?}], language, meta:{...}, template?}
verify::MathItem item_from_json(const nlohmann::json& j, const Where& at);
nlohmann::json item_to_json(const verify::MathItem& item);

verify::GenerationInfo gen_from_json(const nlohmann::json& j);
nlohmann::json gen_to_json(const verify::GenerationInfo& g);

/// {id?, item_id, text, gen:{model_id, strategy, temperature, prompt_id}}.
/// Equations and the final answer are re-extracted from text.
verify::ReasoningPath path_from_json(const nlohmann::json& j, const extract::ExtractionPatterns& patterns,
                                     const Where& at);
nlohmann::json path_to_json(const verify::ReasoningPath& p);

nlohmann::json verdict_to_json(const verify::Verdict& v);
verify::Verdict verdict_from_json(const nlohmann::json& j, const std::string& path_id, const Where& at);

/// One line of verified/filtered output: {path, verdict}.
nlohmann::json checked_to_json(const verify::CheckedPath& c);

nlohmann::json sft_to_json(const augment::SftRecord& r);
nlohmann::json pair_to_json(const prefs::PreferencePair& p);
nlohmann::json graded_to_json(const eval::GradedResult& g);

struct Prediction {
  std::string item_id;
  std::string prediction;
};
Prediction prediction_from_json(const nlohmann::json& j, const Where& at);

}  // namespace mathforge::schema
