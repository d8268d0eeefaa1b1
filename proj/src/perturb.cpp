#include <random>
#include <set>

#include "mathforge/eval.hpp"
#include "mathforge/expr.hpp"
#include "mathforge/io.hpp"

namespace mathforge::eval {

namespace {

BigInt pow10(int n) {
  BigInt r = 1;
  for (int i = 0; i < n; ++i) r *= 10;
  return r;
}

// Slot value as an integer count of 10^-scale units.
BigInt to_units(const std::string& value, int scale) {
  const BigRational v = Decimal::parse(value).to_rational() * BigRational(pow10(scale));
  if (boost::multiprecision::denominator(v) != 1) {
    throw TemplateError("value '" + value + "' has more than " + std::to_string(scale) + " decimals");
  }
  return boost::multiprecision::numerator(v);
}

std::string from_units(const BigInt& units, int scale) {
  const bool negative = units < 0;
  std::string digits = (negative ? BigInt(-units) : units).str();
  if (scale > 0) {
    if (digits.size() <= static_cast<std::size_t>(scale)) digits.insert(0, scale + 1 - digits.size(), '0');
    digits.insert(digits.size() - static_cast<std::size_t>(scale), ".");
  }
  return negative ? "-" + digits : digits;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Uniform in [0, range) by rejection, independent of library distributions.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t range) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  for (;;) {
    const std::uint64_t x = rng();
    if (x < limit) return x % range;
  }
}

}  // namespace

NumberedTemplate NumberedTemplate::from_json(const nlohmann::json& j) {
  NumberedTemplate t;
  try {
    t.id = j.at("id").get<std::string>();
    t.text = j.at("text").get<std::string>();
    t.formula = j.at("formula").get<std::string>();
    for (const auto& s : j.at("slots")) {
      t.slots.push_back({s.at("name").get<std::string>(), s.value("scale", 0), s.at("lo").get<std::string>(),
                         s.at("hi").get<std::string>()});
    }
    t.original_values = j.at("original_values").get<std::vector<std::string>>();
    if (j.contains("answer_unit")) t.answer_unit = j.at("answer_unit").get<std::string>();
    t.require_positive = j.value("require_positive", true);
    t.require_integer = j.value("require_integer", false);
    t.language = verify::parse_language(j.value("language", "en"));
    if (j.contains("meta")) {
      const auto& m = j.at("meta");
      auto opt = [&m](const char* k) -> std::optional<int> {
        if (m.contains(k) && !m.at(k).is_null()) return m.at(k).get<int>();
        return std::nullopt;
      };
      t.meta = {opt("grade"), opt("reasoning_steps"), opt("digits"), opt("distractor_count")};
    }
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError(std::string("bad template: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw TemplateError(std::string("bad template: ") + e.what());
  }
  t.validate();
  return t;
}

nlohmann::json NumberedTemplate::to_json() const {
  nlohmann::json slots_json = nlohmann::json::array();
  for (const SlotDomain& s : slots) slots_json.push_back({{"name", s.name}, {"scale", s.scale}, {"lo", s.lo}, {"hi", s.hi}});
  nlohmann::json meta_json = nlohmann::json::object();
  if (meta.grade) meta_json["grade"] = *meta.grade;
  if (meta.reasoning_steps) meta_json["reasoning_steps"] = *meta.reasoning_steps;
  if (meta.digits) meta_json["digits"] = *meta.digits;
  if (meta.distractor_count) meta_json["distractor_count"] = *meta.distractor_count;
  nlohmann::json j = {{"id", id},
                      {"text", text},
                      {"formula", formula},
                      {"slots", slots_json},
                      {"original_values", original_values},
                      {"require_positive", require_positive},
                      {"require_integer", require_integer},
                      {"language", verify::to_string(language)},
                      {"meta", meta_json},
                      {"checksum", checksum()}};
  if (answer_unit) j["answer_unit"] = *answer_unit;
  return j;
}

std::vector<NumberedTemplate::Piece> NumberedTemplate::pieces() const {
  std::vector<Piece> out;
  std::string literal;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == '{') {
      const std::size_t close = text.find('}', pos);
      if (close != std::string::npos) {
        const std::string name = text.substr(pos + 1, close - pos - 1);
        const bool known = std::any_of(slots.begin(), slots.end(), [&](const SlotDomain& s) { return s.name == name; });
        if (known) {
          out.push_back({false, literal});
          literal.clear();
          out.push_back({true, name});
          pos = close + 1;
          continue;
        }
      }
    }
    literal.push_back(text[pos++]);
  }
  out.push_back({false, literal});
  return out;
}

std::size_t NumberedTemplate::slot_index(const std::string& name) const {
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].name == name) return i;
  }
  throw TemplateError("template " + id + ": unknown slot '" + name + "'");
}

void NumberedTemplate::validate() const {
  if (slots.empty()) throw TemplateError("template " + id + " has no slots");
  if (original_values.size() != slots.size()) throw TemplateError("template " + id + ": one original value per slot");
  std::set<std::string> names;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const SlotDomain& s = slots[i];
    if (!names.insert(s.name).second) throw TemplateError("template " + id + ": duplicate slot " + s.name);
    if (s.scale < 0 || s.scale > 6) throw TemplateError("template " + id + ": slot scale out of range");
    if (text.find("{" + s.name + "}") == std::string::npos) {
      throw TemplateError("template " + id + ": slot " + s.name + " does not occur in the text");
    }
    const BigInt lo = to_units(s.lo, s.scale);
    const BigInt hi = to_units(s.hi, s.scale);
    const BigInt orig = to_units(original_values[i], s.scale);
    if (lo > hi) throw TemplateError("template " + id + ": empty domain for " + s.name);
    if (hi - lo >= BigInt(std::numeric_limits<std::uint64_t>::max())) {
      throw TemplateError("template " + id + ": domain too wide for " + s.name);
    }
    if (orig < lo || orig > hi) throw TemplateError("template " + id + ": original value outside domain of " + s.name);
  }
  try {
    evaluate(original_values);
  } catch (const std::exception& e) {
    throw TemplateError("template " + id + ": formula does not evaluate: " + e.what());
  }
}

std::string NumberedTemplate::checksum() const {
  std::string joined;
  bool first = true;
  for (const Piece& p : pieces()) {
    if (p.is_slot) continue;
    if (!first) joined.push_back('\x1f');
    joined += p.text;
    first = false;
  }
  return io::sha256_hex(joined);
}

std::optional<std::string> NumberedTemplate::checksum_of(const std::string& question,
                                                         const std::vector<std::string>& values) const {
  if (values.size() != slots.size()) return std::nullopt;
  std::string joined;
  bool first = true;
  std::size_t pos = 0;
  for (const Piece& p : pieces()) {
    if (p.is_slot) {
      const std::string& v = values[slot_index(p.text)];
      if (question.compare(pos, v.size(), v) != 0) return std::nullopt;
      pos += v.size();
      continue;
    }
    // Literal segment: it must occur verbatim at this position.
    if (question.compare(pos, p.text.size(), p.text) != 0) return std::nullopt;
    if (!first) joined.push_back('\x1f');
    joined += question.substr(pos, p.text.size());
    first = false;
    pos += p.text.size();
  }
  if (pos != question.size()) return std::nullopt;
  return io::sha256_hex(joined);
}

std::string NumberedTemplate::render_question(const std::vector<std::string>& values) const {
  if (values.size() != slots.size()) throw TemplateError("template " + id + ": wrong number of values");
  std::string out;
  for (const Piece& p : pieces()) out += p.is_slot ? values[slot_index(p.text)] : p.text;
  return out;
}

BigRational NumberedTemplate::evaluate(const std::vector<std::string>& values) const {
  if (values.size() != slots.size()) throw TemplateError("template " + id + ": wrong number of values");
  std::string f;
  std::size_t pos = 0;
  while (pos < formula.size()) {
    if (formula[pos] == '{') {
      const std::size_t close = formula.find('}', pos);
      if (close == std::string::npos) throw TemplateError("template " + id + ": unterminated placeholder in formula");
      f += "(" + values[slot_index(formula.substr(pos + 1, close - pos - 1))] + ")";
      pos = close + 1;
    } else {
      f.push_back(formula[pos++]);
    }
  }
  const NumericValue v = expr::eval_expression(expr::parse_expression(f));
  return *v.exact();
}

verify::MathItem NumberedTemplate::instantiate(const std::vector<std::string>& values, const std::string& item_id) const {
  const BigRational gold = evaluate(values);
  verify::MathItem item;
  item.id = item_id;
  item.question = render_question(values);
  item.gold_answers.push_back({NumericValue(gold), answer_unit, format_rational(gold)});
  item.language = language;
  item.meta = meta;
  item.template_ref = verify::TemplateRef{id, values};
  return item;
}

std::vector<verify::MathItem> perturb_numbers(const NumberedTemplate& tmpl, std::uint64_t seed, int count) {
  tmpl.validate();
  if (count < 0) throw std::invalid_argument("count must be >= 0");
  const std::uint64_t h = fnv1a(tmpl.id);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  std::mt19937_64 rng(seq);

  struct Range {
    BigInt lo;
    std::uint64_t size;
    int scale;
  };
  std::vector<Range> ranges;
  std::vector<std::string> original;
  for (std::size_t i = 0; i < tmpl.slots.size(); ++i) {
    const SlotDomain& s = tmpl.slots[i];
    const BigInt lo = to_units(s.lo, s.scale);
    const BigInt hi = to_units(s.hi, s.scale);
    ranges.push_back({lo, static_cast<std::uint64_t>(hi - lo) + 1, s.scale});
    original.push_back(from_units(to_units(tmpl.original_values[i], s.scale), s.scale));
  }

  std::set<std::vector<std::string>> seen{original};
  std::vector<verify::MathItem> out;
  int failures = 0;
  while (static_cast<int>(out.size()) < count) {
    std::vector<std::string> values;
    for (const Range& r : ranges) values.push_back(from_units(r.lo + BigInt(uniform_below(rng, r.size)), r.scale));
    bool ok = !seen.count(values);
    BigRational gold;
    if (ok) {
      try {
        gold = tmpl.evaluate(values);
        if (tmpl.require_positive && gold <= 0) ok = false;
        if (tmpl.require_integer && boost::multiprecision::denominator(gold) != 1) ok = false;
      } catch (const expr::EvalError&) {
        ok = false;
      }
    }
    if (!ok) {
      if (++failures >= kMaxRejections) {
        throw DomainExhausted("template " + tmpl.id + ": " + std::to_string(kMaxRejections) +
                              " consecutive rejected draws");
      }
      continue;
    }
    failures = 0;
    seen.insert(values);
    out.push_back(tmpl.instantiate(values, tmpl.id + "/p" + std::to_string(out.size())));
  }
  return out;
}

}  // namespace mathforge::eval
