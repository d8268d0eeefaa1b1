#include "mathforge/extract.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mathforge/text.hpp"
#include "mathforge/units.hpp"

namespace mathforge::extract {

// ---------------------------------------------------------------------------
// Patterns

namespace {

const std::string kNumCore = R"((?:(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|\.\d+))";
const std::string kNum = "(?:-|−)?(?:\\$|￥|¥)?\\s?" + kNumCore + "(?:\\s?/\\s?" + kNumCore +
                         ")?(?:\\s?(?:%|％))?";

PatternKind kind_from_string(const std::string& s) {
  if (s == "answer") return PatternKind::Answer;
  if (s == "last-line-answer") return PatternKind::LastLineAnswer;
  if (s == "calc-annotation") return PatternKind::CalcAnnotation;
  throw PatternError("unknown pattern kind '" + s + "'");
}

const char* kind_to_string(PatternKind k) {
  switch (k) {
    case PatternKind::Answer: return "answer";
    case PatternKind::LastLineAnswer: return "last-line-answer";
    case PatternKind::CalcAnnotation: return "calc-annotation";
  }
  return "?";
}

std::regex compile(const AnswerPattern& p) {
  std::regex re;
  try {
    re = std::regex(p.pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw PatternError("invalid pattern '" + p.pattern + "': " + e.what());
  }
  if (re.mark_count() != 1) {
    throw PatternError("pattern '" + p.pattern + "' must have exactly one capture group, has " +
                       std::to_string(re.mark_count()));
  }
  return re;
}

}  // namespace

ExtractionPatterns::ExtractionPatterns(std::vector<AnswerPattern> patterns, bool split_chains)
    : patterns_(std::move(patterns)), split_chains_(split_chains) {
  std::vector<AnswerPattern> answers;
  for (const AnswerPattern& p : patterns_) {
    if (p.kind == PatternKind::CalcAnnotation) {
      if (calc_) throw PatternError("at most one calc-annotation pattern is allowed");
      calc_ = compile(p);
    } else {
      answers.push_back(p);
    }
  }
  if (answers.empty()) throw PatternError("at least one answer pattern is required");
  std::stable_sort(answers.begin(), answers.end(),
                   [](const AnswerPattern& a, const AnswerPattern& b) { return a.priority < b.priority; });
  for (AnswerPattern& p : answers) {
    std::regex re = compile(p);
    tiers_.push_back({std::move(p), std::move(re)});
  }
}

ExtractionPatterns ExtractionPatterns::defaults() {
  const std::string unit = units::cjk_unit_regex();
  std::vector<AnswerPattern> p = {
      {"en", PatternKind::Answer, R"(\\boxed\{\s*([^{}]*?)\s*\})", 10},
      {"en", PatternKind::Answer, R"(^\s*####\s*(.+?)\s*$)", 20},
      {"en", PatternKind::Answer, "[Tt]he (?:final )?answer is\\s*(?::|：)?\\s*(" + kNum + ")", 30},
      {"en", PatternKind::Answer, "[Aa]nswer\\s*(?::|：)\\s*(" + kNum + ")", 40},
      {"zh", PatternKind::Answer, "答案(?:是|为)?\\s*(?::|：)?\\s*(" + kNum + "(?:" + unit + ")?)", 50},
      {"zh", PatternKind::Answer,
       "(?:所以|因此)(?:(?!。)[^\\n])*?(?:是|为)(?:(?!。)[^\\n])*?(" + kNum + "(?:" + unit +
           ")?)\\s*(?:。|$)",
       60},
      {"any", PatternKind::LastLineAnswer, "(" + kNum + ")", 70},
      {"any", PatternKind::CalcAnnotation, "<<([^<>]*)>>", 0},
  };
  return ExtractionPatterns(std::move(p), true);
}

ExtractionPatterns ExtractionPatterns::from_json(const nlohmann::json& j) {
  const nlohmann::json* list = &j;
  bool split = true;
  if (j.is_object()) {
    split = j.value("split_chains", true);
    if (!j.contains("patterns")) throw PatternError("pattern config needs a 'patterns' list");
    list = &j.at("patterns");
  }
  if (!list->is_array()) throw PatternError("'patterns' must be a list");
  std::vector<AnswerPattern> out;
  for (const auto& e : *list) {
    try {
      out.push_back({e.value("lang", std::string("any")), kind_from_string(e.at("kind").get<std::string>()),
                     e.at("pattern").get<std::string>(), e.value("priority", 0)});
    } catch (const nlohmann::json::exception& ex) {
      throw PatternError(std::string("bad pattern entry: ") + ex.what());
    }
  }
  return ExtractionPatterns(std::move(out), split);
}

ExtractionPatterns ExtractionPatterns::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PatternError("cannot open pattern file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw PatternError("pattern file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json ExtractionPatterns::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const AnswerPattern& p : patterns_) {
    list.push_back({{"lang", p.lang}, {"kind", kind_to_string(p.kind)}, {"pattern", p.pattern},
                    {"priority", p.priority}});
  }
  return {{"split_chains", split_chains_}, {"patterns", list}};
}

// ---------------------------------------------------------------------------
// Answer normalization

namespace {

bool consume(std::string_view s, std::size_t& pos, std::string_view what) {
  if (s.substr(pos, what.size()) == what) {
    pos += what.size();
    return true;
  }
  return false;
}

void skip_spaces(std::string_view s, std::size_t& pos) {
  while (pos < s.size()) {
    const text::CodePoint cp = text::decode_utf8(s, pos);
    if (!text::is_space(cp.value)) break;
    pos += cp.length;
  }
}

// Digits with optional thousands commas and a fractional part; commas are
// dropped. Returns empty when no digit is present.
std::string read_numeral(std::string_view s, std::size_t& pos) {
  std::string digits;
  std::size_t p = pos;
  while (p < s.size()) {
    if (text::is_ascii_digit(s[p])) {
      digits.push_back(s[p++]);
    } else if (s[p] == ',' && !digits.empty() && p + 1 < s.size() && text::is_ascii_digit(s[p + 1])) {
      ++p;
    } else {
      break;
    }
  }
  if (p + 1 < s.size() && s[p] == '.' && text::is_ascii_digit(s[p + 1])) {
    digits.push_back('.');
    ++p;
    while (p < s.size() && text::is_ascii_digit(s[p])) digits.push_back(s[p++]);
  }
  if (digits.empty() || digits == ".") return {};
  pos = p;
  return digits;
}

BigRational numeral_value(const std::string& digits) {
  const std::size_t point = digits.find('.');
  if (point == std::string::npos) return BigRational(parse_digits(digits));
  const std::string int_part = point == 0 ? "0" : digits.substr(0, point);
  const std::string frac = digits.substr(point + 1);
  BigInt scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  return BigRational(parse_digits(int_part + frac), scale);
}

std::string strip_latex(std::string_view raw) {
  std::string s(raw);
  auto replace_all = [&s](const std::string& from, const std::string& to) {
    for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) {
      s.replace(p, from.size(), to);
    }
  };
  replace_all("\\$", "$");
  replace_all("\\%", "%");
  replace_all("\\!", "");
  replace_all("\\,", "");
  // \frac{a}{b} and \dfrac{a}{b} -> a/b
  for (const std::string cmd : {"\\dfrac{", "\\frac{"}) {
    for (std::size_t p = s.find(cmd); p != std::string::npos; p = s.find(cmd)) {
      const std::size_t a_end = s.find('}', p + cmd.size());
      if (a_end == std::string::npos || a_end + 1 >= s.size() || s[a_end + 1] != '{') break;
      const std::size_t b_end = s.find('}', a_end + 2);
      if (b_end == std::string::npos) break;
      const std::string a = s.substr(p + cmd.size(), a_end - p - cmd.size());
      const std::string b = s.substr(a_end + 2, b_end - a_end - 2);
      s.replace(p, b_end + 1 - p, a + "/" + b);
    }
  }
  return s;
}

}  // namespace

AnswerValue normalize_answer(std::string_view raw) {
  const std::string cleaned = strip_latex(text::trim(raw));
  const std::string_view s = cleaned;
  std::size_t pos = 0;
  std::optional<std::string> unit;
  bool negative = false;

  auto take_sign = [&] {
    if (consume(s, pos, "-") || consume(s, pos, "−")) negative = !negative;
  };
  take_sign();
  skip_spaces(s, pos);
  if (const std::size_t n = units::match_currency(s, pos)) {
    unit = units::canonical_unit(s.substr(pos, n));
    pos += n;
    skip_spaces(s, pos);
    take_sign();
  }
  std::string numer = read_numeral(s, pos);
  if (numer.empty()) throw NormalizationError("no numeral in '" + std::string(raw) + "'");
  BigRational value = numeral_value(numer);

  std::size_t look = pos;
  skip_spaces(s, look);
  if (look < s.size() && s[look] == '/') {
    std::size_t after = look + 1;
    skip_spaces(s, after);
    const std::string denom = read_numeral(s, after);
    if (!denom.empty()) {
      const BigRational d = numeral_value(denom);
      if (d == 0) throw NormalizationError("zero denominator in '" + std::string(raw) + "'");
      value /= d;
      pos = after;
    }
  }
  if (negative) value = -value;

  skip_spaces(s, pos);
  if (consume(s, pos, "%") || consume(s, pos, "％")) {
    unit = "%";
  } else if (const std::size_t n = units::match_cjk_unit(s, pos)) {
    unit = std::string(s.substr(pos, n));
    pos += n;
  }
  std::string_view rest = text::trim(s.substr(pos));
  while (!rest.empty() && (rest.back() == '.' || rest.back() == '!' || rest.back() == ',')) rest.remove_suffix(1);
  if (text::starts_with(rest, "。") || rest == "。") rest = {};
  if (rest.size() >= 3 && rest.substr(rest.size() - 3) == "。") rest.remove_suffix(3);
  rest = text::trim(rest);
  if (!rest.empty()) {
    const bool has_digit = std::any_of(rest.begin(), rest.end(), [](char c) { return text::is_ascii_digit(c); });
    if (has_digit || rest.size() > 24) {
      throw NormalizationError("unexpected text after numeral in '" + std::string(raw) + "'");
    }
    if (!unit || *unit == "$" || *unit == "元") unit = std::string(rest);
  }
  return AnswerValue{NumericValue(std::move(value)), unit, std::string(text::trim(raw))};
}

AnswerValue token_answer(std::string_view raw) {
  return AnswerValue{NumericValue(NonNumericToken{std::string(text::trim(raw))}), std::nullopt,
                     std::string(text::trim(raw))};
}

// ---------------------------------------------------------------------------
// Equation scanning

namespace {

enum class Kind { Number, Op, Word, LParen, RParen, Percent, Super, Equals, Currency, Unit, Annotation, Boundary };

struct Tok {
  Kind kind = Kind::Boundary;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool space_before = false;
  bool minus = false;       // Op: a minus sign
  bool full_width = false;  // paren: （ ）
  std::string_view text;
};

struct AnnotationRange {
  std::size_t begin;  // whole markup
  std::size_t end;
  std::size_t inner_begin;
  std::size_t inner_end;
};

std::vector<Tok> tokenize(std::string_view s, const std::vector<AnnotationRange>& notes) {
  std::vector<Tok> out;
  std::size_t note = 0;
  bool space = false;
  std::size_t pos = 0;
  auto emit = [&](Kind k, std::size_t b, std::size_t e) -> Tok& {
    Tok t;
    t.kind = k;
    t.begin = b;
    t.end = e;
    t.space_before = space;
    t.text = s.substr(b, e - b);
    space = false;
    out.push_back(t);
    return out.back();
  };
  while (pos < s.size()) {
    if (note < notes.size() && pos == notes[note].begin) {
      emit(Kind::Annotation, notes[note].begin, notes[note].end);
      pos = notes[note].end;
      ++note;
      continue;
    }
    const char c = s[pos];
    const text::CodePoint cp = text::decode_utf8(s, pos);
    if (c == '\n') {
      emit(Kind::Boundary, pos, pos + 1);
      ++pos;
      continue;
    }
    if (text::is_space(cp.value)) {
      space = true;
      pos += cp.length;
      continue;
    }
    if (const std::size_t n = units::match_currency(s, pos)) {
      emit(Kind::Currency, pos, pos + n);
      pos += n;
      continue;
    }
    if (const std::size_t n = units::match_cjk_unit(s, pos)) {
      emit(Kind::Unit, pos, pos + n);
      pos += n;
      continue;
    }
    const bool leading_point = c == '.' && pos + 1 < s.size() && text::is_ascii_digit(s[pos + 1]) &&
                               (pos == 0 || !text::is_ascii_digit(s[pos - 1]));
    if (text::is_ascii_digit(c) || leading_point) {
      const std::size_t b = pos;
      while (pos < s.size()) {
        if (text::is_ascii_digit(s[pos])) {
          ++pos;
        } else if (s[pos] == ',' && pos + 3 < s.size() && text::is_ascii_digit(s[pos + 1]) &&
                   text::is_ascii_digit(s[pos + 2]) && text::is_ascii_digit(s[pos + 3]) &&
                   (pos + 4 >= s.size() || !text::is_ascii_digit(s[pos + 4]))) {
          pos += 4;
        } else {
          break;
        }
      }
      if (pos + 1 < s.size() && s[pos] == '.' && text::is_ascii_digit(s[pos + 1])) {
        ++pos;
        while (pos < s.size() && text::is_ascii_digit(s[pos])) ++pos;
      }
      emit(Kind::Number, b, pos);
      continue;
    }
    if (text::is_ascii_alpha(c)) {
      const std::size_t b = pos;
      while (pos < s.size()) {
        if (text::is_ascii_alpha(s[pos])) {
          ++pos;
        } else if (s[pos] == '\'' && pos + 1 < s.size() && text::is_ascii_alpha(s[pos + 1])) {
          ++pos;
        } else if (s[pos] == '\'' && (s[pos - 1] == 's' || s[pos - 1] == 'S')) {
          ++pos;  // plural possessive: Homes'
        } else {
          break;
        }
      }
      emit(Kind::Word, b, pos);
      continue;
    }
    const std::size_t b = pos;
    pos += cp.length;
    switch (cp.value) {
      case U'+': case 0xFF0B: case U'*': case 0x00D7: case 0x00B7: case U'/': case 0x00F7: case U'^':
        emit(Kind::Op, b, pos);
        break;
      case U'-': case 0x2212: case 0xFF0D:
        emit(Kind::Op, b, pos).minus = true;
        break;
      case U'(': emit(Kind::LParen, b, pos); break;
      case 0xFF08: emit(Kind::LParen, b, pos).full_width = true; break;
      case U')': emit(Kind::RParen, b, pos); break;
      case 0xFF09: emit(Kind::RParen, b, pos).full_width = true; break;
      case U'%': case 0xFF05: emit(Kind::Percent, b, pos); break;
      case 0x00B2: case 0x00B3: emit(Kind::Super, b, pos); break;
      case U'=': case 0xFF1D: emit(Kind::Equals, b, pos); break;
      case 0x03C0: emit(Kind::Word, b, pos); break;  // pi: a symbol, never a literal
      default: emit(Kind::Boundary, b, pos); break;
    }
  }
  return out;
}

bool is_times_word(const Tok& t) { return t.kind == Kind::Word && (t.text == "x" || t.text == "X"); }

// Words that may annotate a quantity ("advance payment", "change"). Single
// letters other than a/A/I read as variables.
bool is_annotation_word(const Tok& t) {
  if (t.kind != Kind::Word) return false;
  std::size_t letters = 0;
  for (char c : t.text) letters += text::is_ascii_alpha(c) ? 1 : 0;
  return letters >= 2 || t.text == "a" || t.text == "A" || t.text == "I";
}

struct SideScan {
  bool ok = false;
  std::vector<std::size_t> kept;
};

class RunScanner {
 public:
  RunScanner(const std::vector<Tok>& toks) : t_(toks) {}  // NOLINT

  std::size_t skip_notes(std::size_t j, std::size_t e) const {
    while (j < e && t_[j].kind == Kind::Annotation) ++j;
    return j;
  }

  // End of a parenthesized annotation group starting at j ("(Cozy Homes' offer)",
  // "（1）"), or 0 when the group is not an annotation.
  std::size_t annotation_group_end(std::size_t j, std::size_t e) const {
    if (t_[j].kind != Kind::LParen) return 0;
    std::size_t k = j + 1;
    std::size_t words = 0;
    while (k < e && t_[k].kind == Kind::Word) {
      if (!is_annotation_word(t_[k])) return 0;
      ++words;
      ++k;
    }
    if (words > 0 && k < e && t_[k].kind == Kind::RParen) return k + 1;
    if (words == 0 && t_[j].full_width && k + 1 < e && t_[k].kind == Kind::Number &&
        t_[k + 1].kind == Kind::RParen && t_[k + 1].full_width) {
      return k + 2;
    }
    return 0;
  }

  bool is_operand_start(std::size_t j, std::size_t e) const {
    const Tok& t = t_[j];
    if (t.kind == Kind::Number || t.kind == Kind::Currency) return true;
    if (t.kind == Kind::LParen) return annotation_group_end(j, e) == 0;
    if (t.kind == Kind::Op && t.minus) {
      const std::size_t n = skip_notes(j + 1, e);
      return n < e && !t_[n].space_before &&
             (t_[n].kind == Kind::Number || t_[n].kind == Kind::LParen || t_[n].kind == Kind::Currency);
    }
    return false;
  }

  // Recognizes an arithmetic side over [b, e). In prefix mode the side may end
  // early at a clean stop (annotation words followed by unrelated content).
  SideScan scan(std::size_t b, std::size_t e, bool prefix) const {
    SideScan r;
    std::size_t i = b;
    int depth = 0;
    bool expect_operand = true;
    bool currency_pending = false;
    auto finish = [&]() {
      r.ok = !expect_operand && depth == 0 && !currency_pending;
      return r;
    };
    auto fail = [&]() {
      r.ok = false;
      r.kept.clear();
      return r;
    };
    while (i < e) {
      const Tok& t = t_[i];
      if (t.kind == Kind::Annotation) {
        ++i;
        continue;
      }
      if (expect_operand) {
        switch (t.kind) {
          case Kind::Number:
            r.kept.push_back(i++);
            expect_operand = false;
            currency_pending = false;
            break;
          case Kind::Currency:
            if (currency_pending) return fail();
            r.kept.push_back(i++);
            currency_pending = true;
            break;
          case Kind::LParen:
            if (currency_pending || annotation_group_end(i, e) != 0) return fail();
            r.kept.push_back(i++);
            ++depth;
            break;
          case Kind::Op:
            if (currency_pending || !is_operand_start(i, e)) return fail();
            r.kept.push_back(i++);
            break;
          default:
            return fail();
        }
        continue;
      }
      switch (t.kind) {
        case Kind::Unit:
        case Kind::Percent:
        case Kind::Super:
          r.kept.push_back(i++);
          break;
        case Kind::Op:
          r.kept.push_back(i++);
          expect_operand = true;
          break;
        case Kind::RParen:
          if (depth == 0) return prefix ? finish() : fail();
          r.kept.push_back(i++);
          --depth;
          break;
        case Kind::Word:
        case Kind::LParen: {
          if (is_times_word(t)) {
            const std::size_t n = skip_notes(i + 1, e);
            if (n < e && (t_[n].kind == Kind::Number || t_[n].kind == Kind::Currency ||
                          t_[n].kind == Kind::LParen)) {
              r.kept.push_back(i++);
              expect_operand = true;
              break;
            }
          }
          if (t.kind == Kind::Word && !t.space_before) return fail();  // "5x", "0.75m"
          // A run of annotation words and word-only groups.
          std::size_t j = i;
          bool any = false;
          while (j < e) {
            if (t_[j].kind == Kind::Word) {
              if (!is_annotation_word(t_[j])) return fail();
              ++j;
              any = true;
            } else if (const std::size_t g = annotation_group_end(j, e)) {
              j = g;
              any = true;
            } else if (t_[j].kind == Kind::Annotation) {
              ++j;
            } else {
              break;
            }
          }
          if (!any) return fail();
          if (j == e || t_[j].kind == Kind::Op || t_[j].kind == Kind::RParen ||
              t_[j].kind == Kind::Equals) {
            i = j;
            break;
          }
          return prefix ? finish() : fail();
        }
        default:
          return fail();
      }
    }
    return finish();
  }

  // Longest valid side ending at `e` whose first token follows the region
  // start, a context word, or a word-only group.
  SideScan best_suffix(std::size_t b, std::size_t e) const {
    for (std::size_t s = b; s < e; ++s) {
      if (!is_operand_start(s, e)) continue;
      bool allowed = s == b;
      if (!allowed) {
        std::size_t p = s - 1;
        while (p > b && t_[p].kind == Kind::Annotation) --p;
        const Tok& prev = t_[p];
        allowed = t_[s].space_before &&
                  (is_annotation_word(prev) || (prev.kind == Kind::RParen && !prev.full_width &&
                                                p > b && t_[p - 1].kind == Kind::Word));
        if (p == b && prev.kind == Kind::Annotation) allowed = true;
        // CJK text ending in a unit character: 大米 36, 每千克 12
        if (p == b && prev.kind == Kind::Unit) allowed = true;
      }
      if (!allowed) continue;
      SideScan r = scan(s, e, /*prefix=*/false);
      if (r.ok) return r;
    }
    return {};
  }

 private:
  const std::vector<Tok>& t_;
};

std::string render(std::string_view s, const std::vector<Tok>& toks, const std::vector<std::size_t>& kept) {
  std::string out;
  std::size_t prev_end = std::string_view::npos;
  for (std::size_t k : kept) {
    const Tok& t = toks[k];
    if (prev_end != std::string_view::npos && t.begin != prev_end) out += ' ';
    out += s.substr(t.begin, t.end - t.begin);
    prev_end = t.end;
  }
  return out;
}

void scan_plain(std::string_view s, std::size_t offset, const std::vector<AnnotationRange>& notes,
                bool split_chains, EquationScan& out) {
  const std::vector<Tok> toks = tokenize(s, notes);
  const RunScanner scanner(toks);
  std::size_t run_b = 0;
  while (run_b < toks.size()) {
    std::size_t run_e = run_b;
    while (run_e < toks.size() && toks[run_e].kind != Kind::Boundary) ++run_e;
    std::vector<std::size_t> eqs;
    for (std::size_t i = run_b; i < run_e; ++i) {
      if (toks[i].kind == Kind::Equals) eqs.push_back(i);
    }
    if (!eqs.empty() && eqs.size() > 1 && !split_chains) {
      out.diagnostics.push_back({{offset + toks[run_b].begin, offset + toks[run_e - 1].end},
                                 "chained equality skipped (chain splitting disabled)"});
      eqs.clear();
    }
    for (std::size_t k = 0; k < eqs.size(); ++k) {
      const std::size_t lb = k == 0 ? run_b : eqs[k - 1] + 1;
      const std::size_t le = eqs[k];
      const std::size_t rb = eqs[k] + 1;
      const std::size_t re = k + 1 < eqs.size() ? eqs[k + 1] : run_e;
      const SideScan lhs = scanner.best_suffix(lb, le);
      const SideScan rhs = scanner.scan(rb, re, /*prefix=*/true);
      const expr::Span eq_span{offset + toks[eqs[k]].begin, offset + toks[eqs[k]].end};
      if (!lhs.ok || !rhs.ok) {
        std::string why = !lhs.ok && rhs.ok ? "incomplete equation: no numeric left side"
                          : lhs.ok          ? "right side is not a numeric expression"
                                            : "neither side is a numeric expression";
        out.diagnostics.push_back({eq_span, why});
        continue;
      }
      try {
        expr::Equation eq{expr::parse_expression(render(s, toks, lhs.kept)),
                          expr::parse_expression(render(s, toks, rhs.kept)),
                          {offset + toks[lhs.kept.front()].begin, offset + toks[rhs.kept.back()].end},
                          {}};
        out.equations.push_back(std::move(eq));
      } catch (const expr::ParseError& e) {
        out.diagnostics.push_back({eq_span, std::string("unparseable candidate: ") + e.what()});
      }
    }
    run_b = run_e + 1;
  }
}

}  // namespace

EquationScan scan_equations(std::string_view text, const ExtractionPatterns& patterns) {
  EquationScan out;
  std::vector<AnnotationRange> notes;
  if (patterns.calc_annotation()) {
    const std::regex& re = *patterns.calc_annotation();
    for (auto it = std::cregex_iterator(text.data(), text.data() + text.size(), re);
         it != std::cregex_iterator(); ++it) {
      const auto& m = *it;
      const auto begin = static_cast<std::size_t>(m.position(0));
      const auto inner = static_cast<std::size_t>(m.position(1));
      notes.push_back({begin, begin + static_cast<std::size_t>(m.length(0)), inner,
                       inner + static_cast<std::size_t>(m.length(1))});
    }
  }
  scan_plain(text, 0, notes, patterns.split_chains(), out);
  for (const AnnotationRange& n : notes) {
    scan_plain(text.substr(n.inner_begin, n.inner_end - n.inner_begin), n.inner_begin, {},
               patterns.split_chains(), out);
  }
  std::stable_sort(out.equations.begin(), out.equations.end(),
                   [](const expr::Equation& a, const expr::Equation& b) { return a.span.begin < b.span.begin; });
  std::stable_sort(out.diagnostics.begin(), out.diagnostics.end(),
                   [](const Diagnostic& a, const Diagnostic& b) { return a.span.begin < b.span.begin; });
  for (std::size_t i = 0; i < out.equations.size(); ++i) out.equations[i].origin.index = static_cast<int>(i);
  return out;
}

std::vector<expr::Equation> extract_equations(std::string_view text, const ExtractionPatterns& patterns) {
  return scan_equations(text, patterns).equations;
}

std::optional<AnswerValue> extract_final_answer(std::string_view text, const ExtractionPatterns& patterns) {
  const std::vector<std::string_view> lines = text::split_lines(text);
  std::string_view last_line;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (!text::trim(*it).empty()) {
      last_line = *it;
      break;
    }
  }
  for (const auto& tier : patterns.answer_tiers()) {
    std::optional<std::string> last;
    auto search = [&](std::string_view line) {
      for (auto it = std::cregex_iterator(line.data(), line.data() + line.size(), tier.re);
           it != std::cregex_iterator(); ++it) {
        last = (*it)[1].str();
      }
    };
    if (tier.pattern.kind == PatternKind::LastLineAnswer) {
      if (!last_line.empty()) search(last_line);
    } else {
      for (std::string_view line : lines) search(line);
    }
    if (last && !text::trim(*last).empty()) {
      try {
        return normalize_answer(*last);
      } catch (const NormalizationError&) {
        return token_answer(*last);
      }
    }
  }
  return std::nullopt;
}

}  // namespace mathforge::extract
