#include "mathforge/schema.hpp"

namespace mathforge::schema {

namespace {

[[noreturn]] void fail(const Where& at, const std::string& what) { throw io::SchemaError(at.file, at.line, what); }

const nlohmann::json& field(const nlohmann::json& j, const char* key, const Where& at) {
  if (!j.is_object() || !j.contains(key)) fail(at, std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string string_field(const nlohmann::json& j, const char* key, const Where& at) {
  const nlohmann::json& v = field(j, key, at);
  if (!v.is_string()) fail(at, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<int> meta_int(const nlohmann::json& meta, const char* key, int min, int max, const Where& at) {
  if (!meta.contains(key) || meta.at(key).is_null()) return std::nullopt;
  const nlohmann::json& v = meta.at(key);
  if (!v.is_number_integer()) fail(at, std::string("meta.") + key + " must be an integer");
  const int x = v.get<int>();
  if (x < min || x > max) fail(at, std::string("meta.") + key + " out of range");
  return x;
}

nlohmann::json meta_to_json(const verify::ItemMeta& m) {
  nlohmann::json j = nlohmann::json::object();
  if (m.grade) j["grade"] = *m.grade;
  if (m.reasoning_steps) j["reasoning_steps"] = *m.reasoning_steps;
  if (m.digits) j["digits"] = *m.digits;
  if (m.distractor_count) j["distractor_count"] = *m.distractor_count;
  return j;
}

}  // namespace

nlohmann::json answer_to_json(const extract::AnswerValue& a) {
  nlohmann::json j = {{"value", a.value.to_string()}, {"raw", a.raw}};
  if (a.unit) j["unit"] = *a.unit;
  return j;
}

verify::MathItem item_from_json(const nlohmann::json& j, const Where& at) {
  verify::MathItem item;
  item.id = string_field(j, "id", at);
  if (item.id.empty()) fail(at, "empty item id");
  item.question = string_field(j, "question", at);
  const nlohmann::json& golds = field(j, "gold_answers", at);
  if (!golds.is_array() || golds.empty()) fail(at, "gold_answers must be a non-empty list");
  for (const auto& g : golds) {
    std::string value;
    std::optional<std::string> unit;
    if (g.is_object()) {
      const nlohmann::json& v = field(g, "value", at);
      value = v.is_string() ? v.get<std::string>() : v.dump();
      if (g.contains("unit") && !g.at("unit").is_null()) unit = g.at("unit").get<std::string>();
    } else if (g.is_string() || g.is_number()) {
      value = g.is_string() ? g.get<std::string>() : g.dump();
    } else {
      fail(at, "gold answer must be an object, string or number");
    }
    if (value.empty()) fail(at, "empty gold answer");
    item.gold_answers.push_back(verify::gold_answer(value, unit));
  }
  try {
    item.language = verify::parse_language(j.value("language", std::string("en")));
  } catch (const std::invalid_argument& e) {
    fail(at, e.what());
  }
  if (j.contains("meta")) {
    const nlohmann::json& m = j.at("meta");
    if (!m.is_object()) fail(at, "meta must be an object");
    item.meta.grade = meta_int(m, "grade", 1, 6, at);
    item.meta.reasoning_steps = meta_int(m, "reasoning_steps", 1, 1000, at);
    item.meta.digits = meta_int(m, "digits", 1, 1000, at);
    item.meta.distractor_count = meta_int(m, "distractor_count", 0, 1000, at);
  }
  if (j.contains("template") && !j.at("template").is_null()) {
    const nlohmann::json& t = j.at("template");
    verify::TemplateRef ref;
    ref.template_id = string_field(t, "template_id", at);
    if (t.contains("slot_values")) ref.slot_values = t.at("slot_values").get<std::vector<std::string>>();
    item.template_ref = ref;
  }
  return item;
}

nlohmann::json item_to_json(const verify::MathItem& item) {
  nlohmann::json golds = nlohmann::json::array();
  for (const extract::AnswerValue& g : item.gold_answers) {
    nlohmann::json a = {{"value", g.value.to_string()}};
    if (g.unit) a["unit"] = *g.unit;
    golds.push_back(a);
  }
  nlohmann::json j = {{"id", item.id},
                      {"question", item.question},
                      {"gold_answers", golds},
                      {"language", verify::to_string(item.language)},
                      {"meta", meta_to_json(item.meta)}};
  if (item.template_ref) {
    j["template"] = {{"template_id", item.template_ref->template_id},
                     {"slot_values", item.template_ref->slot_values}};
  }
  return j;
}

verify::GenerationInfo gen_from_json(const nlohmann::json& j) {
  verify::GenerationInfo g;
  g.model_id = j.value("model_id", std::string());
  g.strategy = verify::parse_strategy(j.value("strategy", std::string("zero-shot-CoT")));
  g.temperature = j.value("temperature", 0.7);
  g.prompt_id = j.value("prompt_id", std::string());
  return g;
}

nlohmann::json gen_to_json(const verify::GenerationInfo& g) {
  return {{"model_id", g.model_id},
          {"strategy", verify::to_string(g.strategy)},
          {"temperature", g.temperature},
          {"prompt_id", g.prompt_id}};
}

verify::ReasoningPath path_from_json(const nlohmann::json& j, const extract::ExtractionPatterns& patterns,
                                     const Where& at) {
  const std::string item_id = string_field(j, "item_id", at);
  const std::string text = string_field(j, "text", at);
  std::string id = j.contains("id") ? string_field(j, "id", at) : item_id + "#" + std::to_string(at.line);
  verify::GenerationInfo gen;
  if (j.contains("gen")) {
    if (!j.at("gen").is_object()) fail(at, "gen must be an object");
    try {
      gen = gen_from_json(j.at("gen"));
    } catch (const std::exception& e) {
      fail(at, std::string("bad gen: ") + e.what());
    }
  }
  return verify::ReasoningPath::build(std::move(id), item_id, text, gen, patterns);
}

nlohmann::json path_to_json(const verify::ReasoningPath& p) {
  return {{"id", p.id}, {"item_id", p.item_id}, {"text", p.text}, {"gen", gen_to_json(p.gen)}};
}

nlohmann::json verdict_to_json(const verify::Verdict& v) {
  nlohmann::json eqs = nlohmann::json::array();
  for (const verify::EquationCheck& c : v.per_equation) {
    eqs.push_back({{"lhs", c.equation.lhs.print()},
                   {"rhs", c.equation.rhs.print()},
                   {"span", {c.equation.span.begin, c.equation.span.end}},
                   {"truth", expr::to_string(c.verdict.truth)},
                   {"reason", c.verdict.reason}});
  }
  return {{"answer_correct", v.answer_correct},
          {"calc_correct", v.calc_correct},
          {"equations", eqs},
          {"extracted", v.extracted ? answer_to_json(*v.extracted) : nlohmann::json()},
          {"notes", v.notes}};
}

verify::Verdict verdict_from_json(const nlohmann::json& j, const std::string& path_id, const Where& at) {
  verify::Verdict v;
  try {
    v.answer_correct = field(j, "answer_correct", at).get<bool>();
    v.calc_correct = field(j, "calc_correct", at).get<bool>();
    int index = 0;
    for (const auto& e : field(j, "equations", at)) {
      expr::Equation eq{expr::parse_expression(e.at("lhs").get<std::string>()),
                        expr::parse_expression(e.at("rhs").get<std::string>()),
                        {e.at("span").at(0).get<std::size_t>(), e.at("span").at(1).get<std::size_t>()},
                        {path_id, index++}};
      const std::string truth = e.at("truth").get<std::string>();
      expr::EquationVerdict ev{truth == "true"    ? expr::Truth::True
                               : truth == "false" ? expr::Truth::False
                                                  : expr::Truth::Indeterminate,
                               e.value("reason", std::string())};
      v.per_equation.push_back({std::move(eq), ev});
    }
    const nlohmann::json& ex = field(j, "extracted", at);
    if (!ex.is_null()) {
      const std::string raw = ex.value("raw", ex.at("value").get<std::string>());
      try {
        v.extracted = extract::normalize_answer(raw);
      } catch (const extract::NormalizationError&) {
        v.extracted = extract::token_answer(raw);
      }
    }
    v.notes = j.value("notes", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    fail(at, std::string("bad verdict: ") + e.what());
  } catch (const expr::ParseError& e) {
    fail(at, std::string("bad verdict equation: ") + e.what());
  }
  return v;
}

nlohmann::json checked_to_json(const verify::CheckedPath& c) {
  return {{"path", path_to_json(c.first)}, {"verdict", verdict_to_json(c.second)}};
}

nlohmann::json sft_to_json(const augment::SftRecord& r) {
  return {{"instruction", r.instruction},
          {"response", r.response},
          {"meta_prompt_id", r.meta_prompt_id},
          {"text", r.render()},
          {"provenance",
           {{"item_id", r.provenance.item_id},
            {"path_id", r.provenance.path_id},
            {"gen", gen_to_json(r.provenance.gen)},
            {"verdict", {{"answer_correct", r.provenance.answer_correct}, {"calc_correct", r.provenance.calc_correct}}}}}};
}

nlohmann::json pair_to_json(const prefs::PreferencePair& p) {
  auto summary = [](const verify::Verdict& v) {
    return nlohmann::json{{"answer_correct", v.answer_correct}, {"calc_correct", v.calc_correct}};
  };
  return {{"prompt", p.prompt},
          {"chosen", p.chosen.text},
          {"rejected", p.rejected.text},
          {"meta",
           {{"item_id", p.provenance.item_id},
            {"chosen_path_id", p.chosen.id},
            {"rejected_path_id", p.rejected.id},
            {"chosen_verdict", summary(p.provenance.chosen_verdict)},
            {"rejected_verdict", summary(p.provenance.rejected_verdict)},
            {"source", prefs::to_string(p.provenance.source)}}}};
}

nlohmann::json graded_to_json(const eval::GradedResult& g) {
  return {{"item_id", g.item_id},
          {"prediction", g.prediction},
          {"extracted", g.extracted ? answer_to_json(*g.extracted) : nlohmann::json()},
          {"correct", g.correct},
          {"facets", meta_to_json(g.facets)},
          {"notes", g.notes}};
}

Prediction prediction_from_json(const nlohmann::json& j, const Where& at) {
  return {string_field(j, "item_id", at), string_field(j, "prediction", at)};
}

}  // namespace mathforge::schema
