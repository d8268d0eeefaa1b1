#include <gtest/gtest.h>

#include "mathforge/eval.hpp"
#include "mathforge/io.hpp"
#include "mathforge/schema.hpp"

using namespace mathforge;
using namespace mathforge::eval;

namespace {

const std::string kRoot = MF_SOURCE_DIR;

verify::MathItem lid() {
  verify::MathItem item;
  item.id = "wooden-lid";
  item.question = "一个圆形木盖的直径是0.8米，它的面积是多少平方米？";
  item.language = verify::Language::Zh;
  item.gold_answers = {verify::gold_answer("0.5024", std::string("平方米"))};
  return item;
}

verify::MathItem numeric_item(const std::string& id, const std::string& gold) {
  verify::MathItem item;
  item.id = id;
  item.question = "q " + id;
  item.gold_answers = {verify::gold_answer(gold, std::nullopt)};
  return item;
}

NumberedTemplate thea_template() {
  return NumberedTemplate::from_json(nlohmann::json::parse(R"({
    "id": "thea",
    "text": "While on vacation in Bali, Thea bought a hat from a craftsman worth ${p}. If she gave the craftsman four ${b} bills, how much change did she get?",
    "formula": "4*{b}-{p}",
    "slots": [{"name": "b", "lo": "5", "hi": "100"}, {"name": "p", "lo": "1", "hi": "200"}],
    "original_values": ["20", "70"]
  })"));
}

GradedResult graded(bool correct, std::optional<int> grade, std::optional<int> distractors = std::nullopt) {
  GradedResult g;
  g.correct = correct;
  g.facets.grade = grade;
  g.facets.distractor_count = distractors;
  return g;
}

}  // namespace

TEST(Prompt, ZeroShotIsTheWrappedQuestion) {
  EvalConfig cfg;
  EXPECT_EQ(assemble_eval_prompt(lid(), cfg), lid().question);
  cfg.chat_wrap = true;
  const std::string wrapped = assemble_eval_prompt(lid(), cfg);
  EXPECT_NE(wrapped.find("USER: " + lid().question), std::string::npos);
  EXPECT_EQ(wrapped.substr(wrapped.size() - 10), "ASSISTANT:");
}

TEST(Prompt, FewShotBlocksInOrder) {
  EvalConfig cfg;
  cfg.few_shot = true;
  cfg.shots = load_shots(kRoot + "/data/eval/gsm8k_shots.jsonl");
  ASSERT_EQ(cfg.shots.size(), 8u);
  const std::string prompt = assemble_eval_prompt(lid(), cfg);
  std::size_t pos = 0;
  for (const Shot& s : cfg.shots) {
    const auto at = prompt.find("Q: " + s.question, pos);
    ASSERT_NE(at, std::string::npos);
    pos = at + 1;
  }
  const auto target = prompt.find("Q: " + lid().question);
  EXPECT_GT(target, pos);
  EXPECT_EQ(prompt.substr(prompt.size() - 3), "\nA:");
}

TEST(Prompt, FewShotWithoutShotsIsConfigError) {
  EvalConfig cfg;
  cfg.few_shot = true;
  EXPECT_THROW(assemble_eval_prompt(lid(), cfg), ConfigError);
}

TEST(Grade, AppendixCases) {
  const EvalConfig cfg;
  auto thea = numeric_item("thea", "10");
  EXPECT_TRUE(grade_prediction(thea, "4 * $20 = $80\n$80 - $70 = $10\nThe answer is 10.", cfg).correct);
  verify::MathItem wire = numeric_item("wire", "360");
  wire.gold_answers = {verify::gold_answer("360", std::string("米"))};
  EXPECT_FALSE(grade_prediction(wire, "所以第二次用去的电线长度为216米。", cfg).correct);
  const auto empty = grade_prediction(thea, "", cfg);
  EXPECT_FALSE(empty.correct);
  EXPECT_EQ(empty.notes, std::vector<std::string>{"no answer extracted"});
}

TEST(Aggregate, OverallAndFacets) {
  const auto r = aggregate_metrics({graded(true, 1), graded(true, 1), graded(true, 2), graded(false, 2)},
                                   {Facet::Grade});
  EXPECT_EQ(r.pass_at_1(), BigRational(3, 4));
  ASSERT_EQ(r.facets.size(), 1u);
  ASSERT_EQ(r.facets[0].rows.size(), 2u);
  EXPECT_EQ(r.facets[0].rows[1].accuracy(), BigRational(1, 2));
  EXPECT_THROW(aggregate_metrics({}, {Facet::Grade}), EmptyInput);
}

TEST(Aggregate, DistractorSeriesShape) {
  std::vector<GradedResult> g;
  for (int d = 0; d <= 5; ++d) {
    for (int i = 0; i < 3; ++i) g.push_back(graded(i < 3 - d / 2, 1, d));
  }
  const auto r = aggregate_metrics(g, {Facet::DistractorCount});
  ASSERT_EQ(r.facets[0].rows.size(), 6u);
  ASSERT_EQ(r.series.size(), 1u);
  for (int d = 0; d <= 5; ++d) EXPECT_EQ(r.series[0].points[static_cast<std::size_t>(d)].first, d);
}

TEST(Aggregate, MissingFacetValuesAreSkipped) {
  const auto r = aggregate_metrics({graded(true, 3), graded(false, std::nullopt)}, {Facet::Grade});
  EXPECT_EQ(r.n, 2);
  EXPECT_EQ(r.facets[0].n(), 1);
}

TEST(Report, CsvRowsAndCanonicalJson) {
  std::vector<GradedResult> g;
  for (int grade = 6; grade >= 1; --grade) g.push_back(graded(grade % 2 == 0, grade));
  const auto r = aggregate_metrics(g, {Facet::Grade}, "fp");
  const std::string csv = emit_report(r, ReportFormat::Csv).at("report.csv");
  EXPECT_EQ(csv,
            "facet,value,n,accuracy\noverall,all,6,0.5000\ngrade,1,1,0.0000\ngrade,2,1,1.0000\ngrade,3,1,0.0000\n"
            "grade,4,1,1.0000\ngrade,5,1,0.0000\ngrade,6,1,1.0000\n");
  EXPECT_EQ(emit_report(r, ReportFormat::Json), emit_report(r, ReportFormat::Json));
  const auto j = nlohmann::json::parse(emit_report(r, ReportFormat::Json).at("report.json"));
  EXPECT_EQ(j.at("config_fingerprint"), "fp");
  const auto plot = emit_report(r, ReportFormat::PlotData);
  ASSERT_TRUE(plot.count("plot_grade.csv"));
  EXPECT_EQ(plot.at("plot_grade.csv").substr(0, 15), "grade,accuracy\n");
}

TEST(Report, NoFacetsOnlyOverall) {
  const auto r = aggregate_metrics({graded(true, 1)}, {});
  EXPECT_EQ(emit_report(r, ReportFormat::Csv).at("report.csv"), "facet,value,n,accuracy\noverall,all,1,1.0000\n");
}

TEST(Report, Fixed4RoundsHalfAwayFromZero) {
  EXPECT_EQ(fixed4(BigRational(2, 3)), "0.6667");
  EXPECT_EQ(fixed4(BigRational(1, 20000)), "0.0001");  // exactly half
  EXPECT_EQ(fixed4(BigRational(-1, 20000)), "-0.0001");
  EXPECT_EQ(fixed4(BigRational(1)), "1.0000");
}

TEST(Perturb, TheaTemplateValues) {
  const auto t = thea_template();
  EXPECT_EQ(t.evaluate({"30", "95"}), BigRational(25));
  const auto same = t.instantiate({"20", "70"}, "thea/orig");
  EXPECT_EQ(same.gold_answers[0].value.to_string(), "10");
  EXPECT_EQ(same.question,
            "While on vacation in Bali, Thea bought a hat from a craftsman worth $70. If she gave the craftsman four $20 "
            "bills, how much change did she get?");
}

TEST(Perturb, DeterministicAndChecksumPreserving) {
  const auto t = thea_template();
  const auto a = perturb_numbers(t, 42, 5);
  const auto b = perturb_numbers(t, 42, 5);
  ASSERT_EQ(a.size(), 5u);
  std::set<std::vector<std::string>> seen;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(schema::item_to_json(a[i]), schema::item_to_json(b[i]));
    const auto& values = a[i].template_ref->slot_values;
    EXPECT_NE(values, t.original_values);
    EXPECT_TRUE(seen.insert(values).second);
    EXPECT_EQ(t.checksum_of(a[i].question, values), t.checksum());
    EXPECT_GT(*a[i].gold_answers[0].value.exact(), 0);
  }
  EXPECT_NE(schema::item_to_json(perturb_numbers(t, 43, 1)[0]), schema::item_to_json(a[0]));
}

TEST(Perturb, ExhaustedDomain) {
  auto j = thea_template().to_json();
  j["slots"] = nlohmann::json::parse(R"([{"name": "b", "lo": "20", "hi": "20"}, {"name": "p", "lo": "70", "hi": "70"}])");
  const auto t = NumberedTemplate::from_json(j);
  EXPECT_THROW(perturb_numbers(t, 1, 1), DomainExhausted);
}

TEST(Perturb, TemplateValidation) {
  auto j = thea_template().to_json();
  j["text"] = "no placeholders";
  EXPECT_THROW(NumberedTemplate::from_json(j), TemplateError);
}
