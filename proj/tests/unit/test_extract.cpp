#include <gtest/gtest.h>

#include <random>

#include "mathforge/extract.hpp"

using namespace mathforge;
using namespace mathforge::extract;

namespace {

const ExtractionPatterns& P() {
  static const ExtractionPatterns p = ExtractionPatterns::defaults();
  return p;
}

std::vector<std::string> eqs(const std::string& text, const ExtractionPatterns& p = P()) {
  std::vector<std::string> out;
  for (const auto& e : extract_equations(text, p)) out.push_back(e.to_string());
  return out;
}

std::string answer(const std::string& text) {
  const auto a = extract_final_answer(text, P());
  return a ? a->value.to_string() : "<none>";
}

}  // namespace

TEST(Equations, AppendixNarration) {
  EXPECT_EQ(eqs("she gave him 4 * $20 = $80 … $80 - $70 = $10"),
            (std::vector<std::string>{"4 * 20 = 80", "80 - 70 = 10"}));
}

TEST(Equations, IncompleteLeftSideIsSkippedWithDiagnostic) {
  EXPECT_TRUE(eqs("+ 4 = 7").empty());
  const auto scan = scan_equations("+ 4 = 7", P());
  ASSERT_EQ(scan.diagnostics.size(), 1u);
  EXPECT_NE(scan.diagnostics[0].message.find("incomplete"), std::string::npos);
}

TEST(Equations, ChainedCjkEquationBothLinksTrue) {
  const auto list = extract_equations("3.14×(0.4米)²=3.14×0.16=0.5024平方米", P());
  ASSERT_EQ(list.size(), 2u);
  for (const auto& e : list) EXPECT_EQ(expr::check_equation(e).truth, expr::Truth::True) << e.to_string();
  EXPECT_EQ(list[0].to_string(), "3.14 * (0.4)² = 3.14 * 0.16");
}

TEST(Equations, CjkUnitBeforeOperand) {
  EXPECT_EQ(eqs("每千克大米 36 / 10 = 3.6 元。"), (std::vector<std::string>{"36 / 10 = 3.6"}));
}

TEST(Equations, CalcAnnotations) {
  const auto list = eqs("He pays 20*4=<<20*4=80>>80 dollars.");
  ASSERT_FALSE(list.empty());
  EXPECT_EQ(list.back(), "20 * 4 = 80");
}

TEST(Equations, VariablesAreNotNumeric) {
  EXPECT_TRUE(eqs("x + 3 = 7").empty());
  EXPECT_TRUE(eqs("g'(x) = 2x * exp(x^2+1)").empty());
}

TEST(Equations, SplitChainsOff) {
  nlohmann::json j = ExtractionPatterns::defaults().to_json();
  j["split_chains"] = false;
  const auto p = ExtractionPatterns::from_json(j);
  EXPECT_TRUE(eqs("1 + 1 = 2 = 2", p).empty());
  EXPECT_EQ(eqs("1 + 1 = 2", p).size(), 1u);
}

TEST(Equations, SpansReSliceTheSource) {
  const std::string text = "Total: 1350 + 2100 = 3450 and 5 * 2 = 10.";
  std::vector<std::string> slices;
  for (const auto& e : extract_equations(text, P())) {
    ASSERT_LE(e.span.end, text.size());
    slices.push_back(text.substr(e.span.begin, e.span.end - e.span.begin));
  }
  EXPECT_EQ(slices, (std::vector<std::string>{"1350 + 2100 = 3450", "5 * 2 = 10"}));
}

TEST(Answer, Markers) {
  EXPECT_EQ(answer("Answer: \\boxed{10}."), "10");
  EXPECT_EQ(answer("The answer is 10."), "10");
  EXPECT_EQ(answer("#### 72"), "72");
  EXPECT_EQ(answer("所以每千克大米的价格是3.6元。"), "3.6");
  EXPECT_EQ(extract_final_answer("所以每千克大米的价格是3.6元。", P())->unit, std::optional<std::string>("元"));
  EXPECT_EQ(answer("nothing numeric here"), "<none>");
}

TEST(Answer, PriorityAndLastMatch) {
  // boxed outranks "the answer is"; within a tier the last match wins
  EXPECT_EQ(answer("The answer is 3. Answer: \\boxed{4}"), "4");
  EXPECT_EQ(answer("The answer is 3.\nThe answer is 5."), "5");
}

TEST(Answer, LastLineFallback) {
  EXPECT_EQ(answer("Some work.\nSo she has 12 left"), "12");
}

TEST(Normalize, Forms) {
  const auto a = normalize_answer("$3,450");
  EXPECT_EQ(a.value.to_string(), "3450");
  EXPECT_EQ(a.unit, std::optional<std::string>("$"));
  EXPECT_EQ(normalize_answer("0").value.to_string(), "0");
  const auto pct = normalize_answer("50%");
  EXPECT_EQ(pct.value.to_string(), "50");
  EXPECT_EQ(pct.unit, std::optional<std::string>("%"));
  EXPECT_EQ(normalize_answer("\\frac{5}{8}").value.to_string(), "0.625");
  EXPECT_EQ(normalize_answer("-12.50").value.to_string(), "-12.5");
  EXPECT_EQ(normalize_answer("0.5024平方米").unit, std::optional<std::string>("平方米"));
  EXPECT_THROW(normalize_answer("3/0"), NormalizationError);
  EXPECT_THROW(normalize_answer("no digits"), NormalizationError);
}

TEST(Patterns, Validation) {
  EXPECT_THROW(ExtractionPatterns({}), PatternError);
  EXPECT_THROW(ExtractionPatterns({{"en", PatternKind::Answer, "(a)(b)", 1}}), PatternError);
  EXPECT_THROW(ExtractionPatterns({{"en", PatternKind::Answer, "([", 1}}), PatternError);
  const auto bad_kind = nlohmann::json::parse(R"js({"patterns":[{"kind":"nope","pattern":"(x)"}]})js");
  EXPECT_THROW(ExtractionPatterns::from_json(bad_kind), PatternError);
}

TEST(Patterns, ShippedFileMatchesDefaults) {
  const auto p = ExtractionPatterns::load(std::string(MF_SOURCE_DIR) + "/data/patterns.json");
  EXPECT_EQ(p.to_json(), ExtractionPatterns::defaults().to_json());
}

// Appending text without '=' or answer markers changes neither the
// equation list nor (when a marker exists) the answer.
TEST(Property, SuffixInvariance) {
  std::mt19937_64 rng(3);
  const char* tails[] = {"\nGreat job.", " Done!", "\n\n", "\nThat is all, folks"};
  for (int i = 0; i < 500; ++i) {
    const int a = static_cast<int>(rng() % 90) + 1;
    const int b = static_cast<int>(rng() % 90) + 1;
    const std::string text = "First " + std::to_string(a) + " + " + std::to_string(b) + " = " +
                             std::to_string(a + b) + ".\nThe answer is " + std::to_string(a + b) + ".";
    const std::string longer = text + tails[rng() % 4];
    EXPECT_EQ(eqs(text), eqs(longer));
    EXPECT_EQ(answer(text), answer(longer));
    EXPECT_EQ(answer(text), std::to_string(a + b));
  }
}
