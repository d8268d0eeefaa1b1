// Acceptance criteria, one PASS/FAIL line each. Exact arithmetic references
// use GMP so they share no code with the library's boost rationals.
#include <gmpxx.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "mathforge/cli.hpp"
#include "mathforge/eval.hpp"
#include "mathforge/expr.hpp"
#include "mathforge/io.hpp"
#include "mathforge/prefs.hpp"
#include "mathforge/schema.hpp"
#include "mathforge/verify.hpp"

namespace fs = std::filesystem;
using namespace mathforge;

namespace {

const fs::path kRoot = MF_SOURCE_DIR;

struct Outcome {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

mpq_class to_mpq(const BigRational& r) {
  mpq_class q(boost::multiprecision::numerator(r).str() + "/" + boost::multiprecision::denominator(r).str());
  q.canonicalize();
  return q;
}

mpq_class mpq_decimal(const std::string& s) {
  // "12.345" -> 12345/1000
  const auto dot = s.find('.');
  // base 10 explicitly: GMP reads a leading 0 as octal otherwise
  if (dot == std::string::npos) return mpq_class(mpz_class(s, 10));
  const std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  const std::size_t places = s.size() - dot - 1;
  mpz_class den = 1;
  for (std::size_t i = 0; i < places; ++i) den *= 10;
  mpq_class q{mpz_class(digits, 10), den};
  q.canonicalize();
  return q;
}

// ---------------------------------------------------------------------------
// AC1 golden corpus

Outcome ac1() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto patterns = extract::ExtractionPatterns::defaults();
  const TolerancePolicy zero{0.0, 0.0};
  std::map<std::string, verify::MathItem> items;
  const fs::path items_file = kRoot / "data/golden/items.jsonl";
  for (const auto& l : io::read_jsonl(items_file)) {
    auto item = schema::item_from_json(l.value, {items_file.string(), l.line});
    items.emplace(item.id, item);
  }
  // Narrated outcome per path: correct or not; for wrong answers, the value given.
  const std::map<std::string, bool> expected = {
      {"thea-hat/KwaiYiiMath", true},         {"thea-hat/ChatGPT", true},        {"thea-hat/GPT4", true},
      {"furniture-offers/KwaiYiiMath", true}, {"furniture-offers/ChatGPT", false}, {"furniture-offers/GPT4", true},
      {"wooden-lid/KwaiYiiMath", true},       {"wooden-lid/ChatGPT", false},     {"wooden-lid/GPT4", true},
      {"rice-price/KwaiYiiMath", true},       {"rice-price/ChatGPT", false},     {"rice-price/GPT4", true},
      {"wire-length/KwaiYiiMath", true},      {"wire-length/ChatGPT", false},    {"wire-length/GPT4", false},
      {"exp-derivative/KwaiYiiMath", true},   {"exp-derivative/ChatGPT", true},  {"exp-derivative/GPT4", true},
  };
  std::set<std::string> seen;
  const fs::path paths_file = kRoot / "data/golden/paths.jsonl";
  for (const auto& l : io::read_jsonl(paths_file)) {
    const auto path = schema::path_from_json(l.value, patterns, {paths_file.string(), l.line});
    const auto& item = items.at(path.item_id);
    const auto verdict = verify::verify_response(item, path, zero);
    const bool correct = verify::passes(item, verdict, {false, zero});
    seen.insert(path.id);
    auto it = expected.find(path.id);
    if (it == expected.end()) {
      o.fail("unexpected path " + path.id);
      continue;
    }
    if (correct != it->second) o.fail(path.id + ": correctness mismatch");
    if (!item.multi_answer() && verdict.answer_correct != it->second && path.id != "furniture-offers/ChatGPT") {
      o.fail(path.id + ": answer verdict mismatch");
    }
    if (path.id == "wire-length/GPT4") {
      if (!verdict.extracted || verdict.extracted->value.to_string() != "216") o.fail("GPT4 wire answer is not 216");
    }
    if (path.id == "furniture-offers/ChatGPT") {
      bool flagged = false;
      for (const auto& c : verdict.per_equation) {
        if (c.equation.to_string() == "1350 + 6 * 350 = 3150" && c.verdict.truth == expr::Truth::False) flagged = true;
      }
      if (!flagged || verdict.calc_correct) o.fail("1350 + 6*350 = 3150 not flagged as a calculation error");
    } else if (!verdict.calc_correct && path.item_id != "exp-derivative") {
      o.fail(path.id + ": unexpected calculation error");
    }
  }
  if (seen.size() != expected.size()) o.fail("golden corpus incomplete");
  const double dt = seconds_since(t0);
  if (dt >= 1.0) o.fail("runtime " + std::to_string(dt) + " s");
  if (o.ok) o.detail = "18/18 paths as narrated, " + std::to_string(dt) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// AC2 expression oracle

struct GenNode {
  enum Kind { Num, Neg, Pct, Bin } kind = Num;
  char op = '+';
  std::string literal;
  std::unique_ptr<GenNode> a, b;
};

int prec(const GenNode& n) {
  switch (n.kind) {
    case GenNode::Num: return 6;
    case GenNode::Pct: return 5;
    case GenNode::Neg: return 3;
    case GenNode::Bin: return n.op == '^' ? 4 : (n.op == '+' || n.op == '-') ? 1 : 2;
  }
  return 0;
}

std::unique_ptr<GenNode> gen_tree(std::mt19937_64& rng, int depth) {
  auto n = std::make_unique<GenNode>();
  std::uniform_int_distribution<int> pick(0, 99);
  auto leaf = [&] {
    n->kind = GenNode::Num;
    const int k = pick(rng);
    if (k < 55) {
      n->literal = std::to_string(std::uniform_int_distribution<int>(0, 999)(rng));
    } else {
      const int places = 1 + pick(rng) % 3;
      std::string frac;
      for (int i = 0; i < places; ++i) frac += static_cast<char>('0' + pick(rng) % 10);
      n->literal = std::to_string(std::uniform_int_distribution<int>(0, 99)(rng)) + "." + frac;
    }
  };
  if (depth == 0 || pick(rng) < 20) {
    leaf();
    return n;
  }
  const int k = pick(rng);
  if (k < 8) {
    n->kind = GenNode::Neg;
    n->a = gen_tree(rng, depth - 1);
  } else if (k < 12) {
    n->kind = GenNode::Pct;
    n->a = gen_tree(rng, depth - 1);
  } else if (k < 22) {
    n->kind = GenNode::Bin;
    n->op = '^';
    n->a = gen_tree(rng, depth - 1);
    n->b = std::make_unique<GenNode>();
    n->b->literal = std::to_string(pick(rng) % 4);
    if (pick(rng) < 25) {  // negative exponent
      auto neg = std::make_unique<GenNode>();
      neg->kind = GenNode::Neg;
      neg->a = std::move(n->b);
      n->b = std::move(neg);
    }
  } else {
    n->kind = GenNode::Bin;
    n->op = "+-*/"[pick(rng) % 4];
    n->a = gen_tree(rng, depth - 1);
    n->b = gen_tree(rng, depth - 1);
  }
  return n;
}

std::string render(const GenNode& n, std::mt19937_64& rng);

std::string wrap(const GenNode& child, bool need, std::mt19937_64& rng) {
  const bool extra = child.kind != GenNode::Num && rng() % 10 == 0;
  const std::string s = render(child, rng);
  return need || extra ? "(" + s + ")" : s;
}

std::string render(const GenNode& n, std::mt19937_64& rng) {
  switch (n.kind) {
    case GenNode::Num: return n.literal;
    case GenNode::Neg: return "-" + wrap(*n.a, prec(*n.a) < 3 || n.a->kind == GenNode::Neg, rng);
    case GenNode::Pct: return wrap(*n.a, n.a->kind != GenNode::Num, rng) + "%";
    case GenNode::Bin: {
      const int p = prec(n);
      if (n.op == '^') return wrap(*n.a, prec(*n.a) <= 4, rng) + " ^ " + wrap(*n.b, prec(*n.b) < 3, rng);
      return wrap(*n.a, prec(*n.a) < p, rng) + " " + n.op + " " + wrap(*n.b, prec(*n.b) <= p, rng);
    }
  }
  return "";
}

struct OracleDivZero {};

mpq_class oracle_eval(const GenNode& n) {
  switch (n.kind) {
    case GenNode::Num: return mpq_decimal(n.literal);
    case GenNode::Neg: return -oracle_eval(*n.a);
    case GenNode::Pct: return oracle_eval(*n.a) / 100;
    case GenNode::Bin: {
      const mpq_class x = oracle_eval(*n.a);
      const mpq_class y = oracle_eval(*n.b);
      switch (n.op) {
        case '+': return x + y;
        case '-': return x - y;
        case '*': return x * y;
        case '/':
          if (y == 0) throw OracleDivZero{};
          return x / y;
        case '^': {
          const long e = y.get_num().get_si();  // exponent is a small integer literal
          if (e == 0) return 1;
          if (x == 0 && e < 0) throw OracleDivZero{};
          mpq_class r = 1;
          for (long i = 0; i < std::labs(e); ++i) r *= x;
          if (e < 0) r = 1 / r;
          return r;
        }
      }
    }
  }
  return 0;
}

Outcome ac2() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20231001);
  int divzero = 0;
  for (int i = 0; i < 10000 && o.ok; ++i) {
    const auto tree = gen_tree(rng, 4);
    const std::string text = render(*tree, rng);
    std::optional<mpq_class> want;
    try {
      want = oracle_eval(*tree);
    } catch (const OracleDivZero&) {
    }
    try {
      const auto ast = expr::parse_expression(text);
      const NumericValue got = expr::eval_expression(ast);
      if (!want) {
        o.fail("expected division by zero: " + text);
      } else if (!got.is_rational() || to_mpq(got.rational()) != *want) {
        o.fail("mismatch on " + text + ": got " + got.to_string() + ", want " + want->get_str());
      }
    } catch (const expr::EvalError& e) {
      if (want || e.kind() != expr::EvalErrorKind::DivisionByZero) o.fail("unexpected eval error on " + text + ": " + e.what());
      ++divzero;
    } catch (const expr::ParseError& e) {
      o.fail("parse error on " + text + ": " + e.what());
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 10.0) o.fail("runtime " + std::to_string(dt) + " s");
  if (o.ok) {
    o.detail = "10000 expressions exact (" + std::to_string(divzero) + " division-by-zero agreed), " +
               std::to_string(dt) + " s";
  }
  return o;
}

// ---------------------------------------------------------------------------
// AC3 filter policy

struct GenPath {
  std::string text;
  bool has_false = false;
  bool has_indeterminate = false;
  bool answer_ok = false;
};

GenPath gen_path(std::mt19937_64& rng, long gold) {
  GenPath p;
  std::uniform_int_distribution<int> pick(0, 99);
  const int lines = pick(rng) % 4;
  for (int i = 0; i < lines; ++i) {
    const long a = 1 + pick(rng);
    const long b = 1 + pick(rng);
    const int kind = pick(rng);
    if (kind < 8) {
      p.text += "Split " + std::to_string(a) + " / 0 = " + std::to_string(a) + " ways.\n";
      p.has_indeterminate = true;
      continue;
    }
    const bool mul = pick(rng) % 2;
    long c = mul ? a * b : a + b;
    if (kind < 28) {
      c += 1 + pick(rng) % 5;
      p.has_false = true;
    }
    p.text += "We get " + std::to_string(a) + (mul ? " * " : " + ") + std::to_string(b) + " = " + std::to_string(c) + ".\n";
  }
  const int ans = pick(rng);
  if (ans < 60) {
    p.text += "The answer is " + std::to_string(gold) + ".";
    p.answer_ok = true;
  } else if (ans < 90) {
    p.text += "The answer is " + std::to_string(gold + 1 + pick(rng) % 9) + ".";
  } else {
    p.text += "I could not finish.";
  }
  return p;
}

Outcome ac3() {
  Outcome o;
  std::mt19937_64 rng(77);
  const auto patterns = extract::ExtractionPatterns::defaults();
  for (int c = 0; c < 1000 && o.ok; ++c) {
    verify::MathItem item;
    item.id = "case-" + std::to_string(c);
    item.question = "q";
    const long gold = 1 + static_cast<long>(rng() % 500);
    item.gold_answers = {verify::gold_answer(std::to_string(gold), std::nullopt)};
    const bool multi = rng() % 5 == 0;
    if (multi) item.gold_answers.push_back(verify::gold_answer("g(x)", std::nullopt));
    verify::FilterPolicy policy;
    policy.strict_calc = rng() % 2;

    std::vector<verify::ReasoningPath> paths;
    std::vector<GenPath> truth;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      GenPath g = (i > 0 && rng() % 4 == 0) ? truth[rng() % truth.size()] : gen_path(rng, gold);
      truth.push_back(g);
      paths.push_back(verify::ReasoningPath::build(item.id + "/" + std::to_string(i), item.id, g.text, {}, patterns));
    }
    const auto kept = verify::filter_paths(item, paths, policy);

    // subsequence of the input
    std::size_t j = 0;
    std::set<std::string> kept_ids;
    for (const auto& cp : kept) {
      while (j < paths.size() && paths[j].id != cp.first.id) ++j;
      if (j == paths.size()) {
        o.fail(item.id + ": output is not a subsequence");
        break;
      }
      kept_ids.insert(cp.first.id);
      ++j;
    }
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto fresh = verify::ReasoningPath::build(paths[i].id, item.id, paths[i].text, {}, patterns);
      const bool reverified = verify::passes(item, verify::verify_response(item, fresh, policy.tol), policy);
      const GenPath& g = truth[i];
      const bool by_construction =
          !g.has_false && !(policy.strict_calc && g.has_indeterminate) && (multi || g.answer_ok);
      const bool retained = kept_ids.count(paths[i].id) > 0;
      if (retained != reverified) o.fail(paths[i].id + ": retention disagrees with re-verification");
      if (retained != by_construction) o.fail(paths[i].id + ": retention disagrees with generated ground truth");
    }
    // dedup laws
    const auto all = kept;
    const auto same = verify::dedup_paths(all, verify::DedupMode::KeepAll);
    if (same.size() != all.size()) o.fail("keep-all dedup is not the identity");
    for (std::size_t i = 0; i < same.size() && i < all.size(); ++i) {
      if (same[i].first.id != all[i].first.id) o.fail("keep-all dedup reordered paths");
    }
    const auto once = verify::dedup_paths(all, verify::DedupMode::ByEquationList);
    const auto twice = verify::dedup_paths(once, verify::DedupMode::ByEquationList);
    if (once.size() != twice.size()) o.fail("by-equation-list dedup is not idempotent");
    for (std::size_t i = 0; i < once.size() && i < twice.size(); ++i) {
      if (once[i].first.id != twice[i].first.id) o.fail("by-equation-list dedup is not idempotent");
    }
  }
  if (o.ok) o.detail = "1000 seeded cases, zero failures";
  return o;
}

// ---------------------------------------------------------------------------
// AC4 losses

Outcome ac4() {
  Outcome o;
  const double ln2 = std::log(2.0);
  auto close = [&](double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
      std::ostringstream ss;
      ss << std::setprecision(17) << what << ": got " << got << ", want " << want;
      o.fail(ss.str());
    }
  };
  for (double x : {-3.5, 0.0, 1.0, 42.0}) close(prefs::rm_ranking_loss(x, x), ln2, 1e-12, "rm_ranking_loss(x,x)");
  close(prefs::dpo_loss({-1.0, -2.0, -1.5, -2.5, 0.1}), ln2, 1e-12, "dpo zero margin");
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double delta = d(rng);
    close(prefs::neg_log_sigmoid(delta) - prefs::neg_log_sigmoid(-delta), -delta, 1e-12, "sigmoid identity");
    close(prefs::rm_ranking_loss(delta, 0.0) - prefs::rm_ranking_loss(0.0, delta), -delta, 1e-12,
          "ranking identity");
  }
  // chosen log-ratio +2, rejected log-ratio -2
  close(prefs::dpo_loss({2.0, -2.0, 0.0, 0.0, 0.1}), 0.5130153, 1e-6, "dpo (2,-2) beta 0.1");
  if (o.ok) o.detail = "closed forms within 1e-12, dpo(2,-2) = 0.5130153";
  return o;
}

// ---------------------------------------------------------------------------
// AC5 end-to-end determinism

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return files;
}

int cli(std::vector<std::string> args, std::string& err_text) {
  std::ostringstream out;
  std::ostringstream err;
  const int rc = cli::run(args, out, err);
  err_text = err.str();
  return rc;
}

Outcome ac5() {
  Outcome o;
  const fs::path tmp = fs::temp_directory_path() / ("mf-accept-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  const std::string cfg = (kRoot / "configs/pipeline-mock.ini").string();
  const std::string stages = "sample,verify,filter,sft,pairs";
  std::string err;
  for (const char* run : {"a", "b"}) {
    if (cli({"--config", cfg, "--out", (tmp / run).string(), "pipeline", stages}, err) != 0) o.fail("pipeline failed: " + err);
  }
  for (const char* s : {"sample", "verify", "filter", "sft", "pairs"}) {
    if (cli({"--config", cfg, "--out", (tmp / "staged").string(), s}, err) != 0) o.fail(std::string(s) + " failed: " + err);
  }
  const auto a = snapshot(tmp / "a");
  if (a.size() < 10) o.fail("expected five outputs and five manifests");
  if (a != snapshot(tmp / "b")) o.fail("two combined runs differ");
  if (a != snapshot(tmp / "staged")) o.fail("staged run differs from combined run");

  // pass@1 on the scripted 20-item prediction set: 14 of 20 are right
  const std::string ecfg = (kRoot / "tests/data/eval20/eval.ini").string();
  if (cli({"--config", ecfg, "--out", (tmp / "eval").string(), "pipeline", "eval,report"}, err) != 0) {
    o.fail("eval failed: " + err);
  } else {
    const std::string bytes = io::read_file(tmp / "eval" / "report.json");
    const auto report = nlohmann::json::parse(bytes);
    if (report.at("n") != 20 || report.at("correct") != 14 ||
        bytes.find("\"pass_at_1\":0.7000") == std::string::npos) {
      o.fail("pass@1 is " + report.at("pass_at_1").dump() + ", expected 14/20");
    }
  }
  fs::remove_all(tmp);
  if (o.ok) o.detail = "byte-identical across runs and staging; pass@1 = 14/20";
  return o;
}

// ---------------------------------------------------------------------------
// AC6 facet identity

bool weighted_mean_matches(const eval::Report& r, std::string& why) {
  const BigRational overall(r.correct, r.n);
  for (const auto& t : r.facets) {
    BigRational weighted = 0;
    std::int64_t total = 0;
    for (const auto& row : t.rows) {
      weighted += row.accuracy() * row.n;
      total += row.n;
    }
    if (total != r.n || weighted / total != overall) {
      why = eval::to_string(t.facet) + " weighted mean differs from overall accuracy";
      return false;
    }
  }
  return true;
}

Outcome ac6() {
  Outcome o;
  const std::vector<eval::Facet> facets{eval::Facet::Grade, eval::Facet::ReasoningSteps, eval::Facet::Digits,
                                        eval::Facet::DistractorCount};
  std::mt19937_64 rng(6);
  for (int s = 0; s < 200 && o.ok; ++s) {
    std::vector<eval::GradedResult> g(1 + rng() % 120);
    for (auto& r : g) {
      r.correct = rng() % 3 != 0;
      r.facets = {1 + static_cast<int>(rng() % 6), 1 + static_cast<int>(rng() % 8), 1 + static_cast<int>(rng() % 5),
                  static_cast<int>(rng() % 6)};
    }
    std::string why;
    if (!weighted_mean_matches(eval::aggregate_metrics(g, facets), why)) o.fail(why);
  }
  // 60 seed questions, each with 0..5 injected distractors
  std::vector<eval::GradedResult> g;
  for (int seed = 0; seed < 60; ++seed) {
    for (int d = 0; d <= 5; ++d) {
      eval::GradedResult r;
      r.item_id = "seed" + std::to_string(seed) + "/d" + std::to_string(d);
      r.correct = static_cast<int>(rng() % 100) >= 12 * d;
      r.facets.distractor_count = d;
      g.push_back(r);
    }
  }
  const auto report = eval::aggregate_metrics(g, {eval::Facet::DistractorCount});
  std::string why;
  if (!weighted_mean_matches(report, why)) o.fail(why);
  if (report.series.size() != 1 || report.series[0].points.size() != 6) {
    o.fail("distractor series must have 6 points");
  } else {
    for (std::size_t i = 0; i < 6; ++i) {
      if (report.series[0].points[i].first != static_cast<int>(i)) o.fail("distractor x-values not 0..5 ascending");
      if (report.facets[0].rows[i].n != 60) o.fail("distractor bucket without n=60");
    }
  }
  if (o.ok) o.detail = "200 random graded sets exact; distractor series 0..5 with n=60 each";
  return o;
}

// ---------------------------------------------------------------------------
// AC7 robustness generator

// Independent evaluator for template formulas: + - * / parentheses, unary
// minus, decimal literals.
class FormulaOracle {
 public:
  explicit FormulaOracle(std::string s) : s_(std::move(s)) {}
  mpq_class run() {
    mpq_class v = sum();
    skip();
    if (i_ != s_.size()) throw std::runtime_error("trailing input in " + s_);
    return v;
  }

 private:
  void skip() {
    while (i_ < s_.size() && s_[i_] == ' ') ++i_;
  }
  mpq_class sum() {
    mpq_class v = product();
    for (skip(); i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-'); skip()) {
      const char op = s_[i_++];
      const mpq_class r = product();
      v = op == '+' ? mpq_class(v + r) : mpq_class(v - r);
    }
    return v;
  }
  mpq_class product() {
    mpq_class v = atom();
    for (skip(); i_ < s_.size() && (s_[i_] == '*' || s_[i_] == '/'); skip()) {
      const char op = s_[i_++];
      const mpq_class r = atom();
      v = op == '*' ? mpq_class(v * r) : mpq_class(v / r);
    }
    return v;
  }
  mpq_class atom() {
    skip();
    if (s_[i_] == '-') {
      ++i_;
      return -atom();
    }
    if (s_[i_] == '(') {
      ++i_;
      mpq_class v = sum();
      skip();
      ++i_;  // ')'
      return v;
    }
    const std::size_t b = i_;
    while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.')) ++i_;
    return mpq_decimal(s_.substr(b, i_ - b));
  }
  std::string s_;
  std::size_t i_ = 0;
};

std::string substitute(std::string text, const std::vector<eval::SlotDomain>& slots,
                       const std::vector<std::string>& values, bool parens) {
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const std::string key = "{" + slots[k].name + "}";
    const std::string val = parens ? "(" + values[k] + ")" : values[k];
    for (std::size_t p = text.find(key); p != std::string::npos; p = text.find(key, p + val.size())) {
      text.replace(p, key.size(), val);
    }
  }
  return text;
}

Outcome ac7() {
  Outcome o;
  const auto t0 = Clock::now();
  const fs::path file = kRoot / "data/robust/templates.jsonl";
  std::vector<eval::NumberedTemplate> templates;
  for (const auto& l : io::read_jsonl(file)) templates.push_back(eval::NumberedTemplate::from_json(l.value));
  if (templates.size() != 60) o.fail("expected 60 templates");
  std::size_t total = 0;
  for (const auto& t : templates) {
    const auto items = eval::perturb_numbers(t, 2024, 5);
    const auto again = eval::perturb_numbers(t, 2024, 5);
    total += items.size();
    if (items.size() != 5) o.fail(t.id + ": expected 5 perturbations");
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& item = items[i];
      if (schema::item_to_json(item) != schema::item_to_json(again[i])) o.fail(t.id + ": not deterministic");
      const auto& values = item.template_ref->slot_values;
      if (values == t.original_values) o.fail(item.id + ": reproduces the original numbers");
      const mpq_class want = FormulaOracle(substitute(t.formula, t.slots, values, true)).run();
      const auto gold = item.gold_answers.at(0).value.exact();
      if (!gold || to_mpq(*gold) != want) o.fail(item.id + ": gold differs from formula");
      if (item.question != substitute(t.text, t.slots, values, false)) o.fail(item.id + ": question text altered");
      if (t.checksum_of(item.question, values) != t.checksum()) o.fail(item.id + ": literal checksum changed");
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 5.0) o.fail("runtime " + std::to_string(dt) + " s");
  if (o.ok) o.detail = std::to_string(total) + " items exact and checksum-preserving, " + std::to_string(dt) + " s";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 golden corpus", ac1},       {"AC2 expression oracle", ac2}, {"AC3 filter policy", ac3},
      {"AC4 loss closed forms", ac4},   {"AC5 determinism", ac5},       {"AC6 facet identity", ac6},
      {"AC7 robustness generator", ac7}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    failed += o.ok ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
