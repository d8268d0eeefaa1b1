#include "mathforge/units.hpp"

#include <array>
#include <string_view>

#include "mathforge/text.hpp"

namespace mathforge::units {
namespace {

// Longest spellings first so that "平方米" wins over "米".
constexpr std::array<std::string_view, 40> kCjkUnits = {
    "平方厘米", "平方分米", "平方千米", "立方厘米", "立方分米", "千瓦时",
    "平方米",   "立方米",   "千米",     "分米",     "厘米",     "毫米",
    "公里",     "千克",     "公斤",     "毫升",     "小时",     "分钟",
    "米",       "克",       "吨",       "升",       "元",       "角",
    "秒",       "天",       "个",       "只",       "本",       "支",
    "张",       "块",       "辆",       "人",       "岁",       "次",
    "页",       "棵",       "条",       "件",
};

std::size_t match_simple_unit(std::string_view s, std::size_t pos) {
  const std::string_view rest = s.substr(pos);
  for (std::string_view u : kCjkUnits) {
    if (text::starts_with(rest, u)) return u.size();
  }
  return 0;
}

}  // namespace

std::size_t match_cjk_unit(std::string_view s, std::size_t pos) {
  const std::size_t first = match_simple_unit(s, pos);
  if (first == 0) return 0;
  const std::size_t slash = pos + first;
  if (slash < s.size() && s[slash] == '/') {
    const std::size_t second = match_simple_unit(s, slash + 1);
    if (second != 0) return first + 1 + second;
  }
  return first;
}

std::size_t match_currency(std::string_view s, std::size_t pos) {
  const std::string_view rest = s.substr(pos);
  if (text::starts_with(rest, "$")) return 1;
  if (text::starts_with(rest, "￥")) return std::string_view("￥").size();
  if (text::starts_with(rest, "¥")) return std::string_view("¥").size();
  return 0;
}

const std::string& cjk_unit_regex() {
  static const std::string pattern = [] {
    std::string alt;
    for (std::string_view u : kCjkUnits) {
      if (!alt.empty()) alt += '|';
      alt += u;
    }
    return "(?:(?:" + alt + ")(?:/(?:" + alt + "))?)";
  }();
  return pattern;
}

std::string canonical_unit(std::string_view unit) {
  const std::string u = text::to_lower_ascii(text::trim(unit));
  if (u == "$" || u == "dollar" || u == "dollars" || u == "usd") return "$";
  if (u == "元" || u == "￥" || u == "¥" || u == "yuan" || u == "rmb") return "元";
  if (u == "%" || u == "％" || u == "percent") return "%";
  return u;
}

}  // namespace mathforge::units
