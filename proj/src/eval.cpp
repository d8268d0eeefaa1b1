#include "mathforge/eval.hpp"

#include <algorithm>
#include <fstream>

#include "mathforge/augment/augment.hpp"
#include "mathforge/io.hpp"

namespace mathforge::eval {

DecodingParams DecodingParams::greedy() { return {}; }

DecodingParams DecodingParams::nucleus() {
  DecodingParams d;
  d.mode = Decoding::Nucleus;
  d.top_p = 0.9;
  d.temperature = 0.7;
  d.repetition_penalty = 1.01;
  return d;
}

std::vector<Shot> load_shots(const std::filesystem::path& path) {
  std::vector<Shot> out;
  for (const io::JsonLine& l : io::read_jsonl(path)) {
    try {
      out.push_back({l.value.at("question").get<std::string>(), l.value.at("rationale").get<std::string>(),
                     l.value.at("answer").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw io::SchemaError(path.string(), l.line, std::string("bad shot: ") + e.what());
    }
  }
  return out;
}

void EvalConfig::validate() const {
  if (few_shot && shots.empty()) throw ConfigError("few-shot prompting needs at least one shot");
  if (decoding.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (decoding.mode == Decoding::Nucleus && !(decoding.top_p > 0 && decoding.top_p <= 1)) {
    throw ConfigError("top_p must be in (0, 1]");
  }
}

nlohmann::json EvalConfig::fingerprint_json() const {
  nlohmann::json shots_json = nlohmann::json::array();
  for (const Shot& s : shots) shots_json.push_back({s.question, s.rationale, s.answer});
  return {{"decoding",
           {{"mode", decoding.mode == Decoding::Greedy ? "greedy" : "nucleus"},
            {"top_p", decoding.top_p},
            {"temperature", decoding.temperature},
            {"repetition_penalty", decoding.repetition_penalty},
            {"max_tokens", decoding.max_tokens}}},
          {"prompting", few_shot ? "few-shot-CoT" : "zero-shot"},
          {"shots", shots_json},
          {"chat_wrap", chat_wrap},
          {"patterns", patterns.to_json()},
          {"tol", {{"abs", tol.abs_tol}, {"rel", tol.rel_tol}}}};
}

std::string assemble_eval_prompt(const verify::MathItem& item, const EvalConfig& config) {
  config.validate();
  std::string prompt;
  if (config.few_shot) {
    for (const Shot& s : config.shots) {
      prompt += "Q: " + s.question + "\nA: " + s.rationale + " The answer is " + s.answer + ".\n\n";
    }
    prompt += "Q: " + item.question + "\nA:";
  } else {
    prompt = item.question;
  }
  if (!config.chat_wrap) return prompt;
  augment::SftRecord wrap;
  wrap.instruction = prompt;
  wrap.meta_prompt_id = augment::vicuna_meta_prompt().id;
  std::string out = wrap.render();
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

GradedResult grade_prediction(const verify::MathItem& item, const std::string& prediction, const EvalConfig& config) {
  GradedResult g;
  g.item_id = item.id;
  g.prediction = prediction;
  g.facets = item.meta;
  g.extracted = extract::extract_final_answer(prediction, config.patterns);
  if (!g.extracted) {
    g.notes.push_back("no answer extracted");
  } else {
    g.correct = verify::answer_matches(item, *g.extracted, config.tol);
  }
  return g;
}

std::string to_string(Facet f) {
  switch (f) {
    case Facet::Grade: return "grade";
    case Facet::ReasoningSteps: return "reasoning_steps";
    case Facet::Digits: return "digits";
    case Facet::DistractorCount: return "distractor_count";
  }
  return "?";
}

Facet parse_facet(const std::string& s) {
  for (Facet f : {Facet::Grade, Facet::ReasoningSteps, Facet::Digits, Facet::DistractorCount}) {
    if (to_string(f) == s) return f;
  }
  throw ConfigError("unknown facet '" + s + "'");
}

std::optional<int> facet_value(const verify::ItemMeta& meta, Facet f) {
  switch (f) {
    case Facet::Grade: return meta.grade;
    case Facet::ReasoningSteps: return meta.reasoning_steps;
    case Facet::Digits: return meta.digits;
    case Facet::DistractorCount: return meta.distractor_count;
  }
  return std::nullopt;
}

std::int64_t FacetTable::n() const {
  std::int64_t s = 0;
  for (const FacetRow& r : rows) s += r.n;
  return s;
}

std::int64_t FacetTable::correct() const {
  std::int64_t s = 0;
  for (const FacetRow& r : rows) s += r.correct;
  return s;
}

Report aggregate_metrics(const std::vector<GradedResult>& graded, const std::vector<Facet>& facets,
                         std::string config_fingerprint) {
  if (graded.empty()) throw EmptyInput("aggregate_metrics: nothing graded");
  Report r;
  r.config_fingerprint = std::move(config_fingerprint);
  for (const GradedResult& g : graded) {
    ++r.n;
    r.correct += g.correct ? 1 : 0;
  }
  for (Facet f : facets) {
    std::map<int, FacetRow> rows;
    for (const GradedResult& g : graded) {
      const std::optional<int> v = facet_value(g.facets, f);
      if (!v) continue;
      FacetRow& row = rows[*v];
      row.value = *v;
      ++row.n;
      row.correct += g.correct ? 1 : 0;
    }
    FacetTable t{f, {}};
    for (auto& [_, row] : rows) t.rows.push_back(row);
    Series s{to_string(f), to_string(f), "accuracy", {}};
    for (const FacetRow& row : t.rows) s.points.emplace_back(row.value, row.accuracy());
    r.facets.push_back(std::move(t));
    r.series.push_back(std::move(s));
  }
  return r;
}

ReportFormat parse_report_format(const std::string& s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "plot-data") return ReportFormat::PlotData;
  throw ConfigError("unknown report format '" + s + "'");
}

std::string fixed4(const BigRational& r) {
  const bool negative = r < 0;
  const BigRational a = negative ? BigRational(-r) : r;
  const BigRational scaled = a * 10000;
  const BigInt num = boost::multiprecision::numerator(scaled);
  const BigInt den = boost::multiprecision::denominator(scaled);
  const BigInt rounded = (2 * num + den) / (2 * den);
  std::string digits = rounded.str();
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  std::string out = (negative && rounded != 0 ? "-" : "") + digits.substr(0, digits.size() - 4) + "." +
                    digits.substr(digits.size() - 4);
  return out;
}

namespace {

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

std::map<std::string, std::string> emit_report(const Report& report, ReportFormat format) {
  std::map<std::string, std::string> files;
  switch (format) {
    case ReportFormat::Json: {
      // Written by hand to pin the 4-decimal float format; keys in sorted order.
      std::string j = "{\"config_fingerprint\":" + json_string(report.config_fingerprint) +
                      ",\"correct\":" + std::to_string(report.correct) + ",\"facets\":{";
      std::vector<const FacetTable*> tables;
      for (const FacetTable& t : report.facets) tables.push_back(&t);
      std::sort(tables.begin(), tables.end(),
                [](const FacetTable* a, const FacetTable* b) { return to_string(a->facet) < to_string(b->facet); });
      for (std::size_t i = 0; i < tables.size(); ++i) {
        if (i) j += ',';
        j += json_string(to_string(tables[i]->facet)) + ":[";
        for (std::size_t k = 0; k < tables[i]->rows.size(); ++k) {
          const FacetRow& row = tables[i]->rows[k];
          if (k) j += ',';
          j += "{\"accuracy\":" + fixed4(row.accuracy()) + ",\"correct\":" + std::to_string(row.correct) +
               ",\"n\":" + std::to_string(row.n) + ",\"value\":" + std::to_string(row.value) + "}";
        }
        j += ']';
      }
      j += "},\"n\":" + std::to_string(report.n) + ",\"pass_at_1\":" + fixed4(report.pass_at_1()) + ",\"series\":[";
      for (std::size_t i = 0; i < report.series.size(); ++i) {
        const Series& s = report.series[i];
        if (i) j += ',';
        j += "{\"name\":" + json_string(s.name) + ",\"points\":[";
        for (std::size_t k = 0; k < s.points.size(); ++k) {
          if (k) j += ',';
          j += "[" + std::to_string(s.points[k].first) + "," + fixed4(s.points[k].second) + "]";
        }
        j += "],\"x_label\":" + json_string(s.x_label) + ",\"y_label\":" + json_string(s.y_label) + "}";
      }
      j += "]}\n";
      files["report.json"] = std::move(j);
      break;
    }
    case ReportFormat::Csv: {
      std::string c = "facet,value,n,accuracy\n";
      c += "overall,all," + std::to_string(report.n) + "," + fixed4(report.pass_at_1()) + "\n";
      for (const FacetTable& t : report.facets) {
        for (const FacetRow& row : t.rows) {
          c += to_string(t.facet) + "," + std::to_string(row.value) + "," + std::to_string(row.n) + "," +
               fixed4(row.accuracy()) + "\n";
        }
      }
      files["report.csv"] = std::move(c);
      break;
    }
    case ReportFormat::PlotData:
      for (const Series& s : report.series) {
        std::string c = s.x_label + "," + s.y_label + "\n";
        for (const auto& [x, y] : s.points) c += std::to_string(x) + "," + fixed4(y) + "\n";
        files["plot_" + s.name + ".csv"] = std::move(c);
      }
      break;
  }
  return files;
}

}  // namespace mathforge::eval
