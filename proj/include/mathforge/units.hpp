#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace mathforge::units {

/// Byte length of the CJK measurement unit starting at `pos` (longest match,
/// including compound rate units such as "元/千克"), or 0 when none.
std::size_t match_cjk_unit(std::string_view s, std::size_t pos);

/// Byte length of a currency symbol ($, ￥, ¥) at `pos`, or 0.
std::size_t match_currency(std::string_view s, std::size_t pos);

/// Regex alternation (no capture) matching any known CJK unit, optionally
/// followed by "/unit". Used by the default answer patterns.
const std::string& cjk_unit_regex();

/// Canonical spelling for unit comparison: currency words fold to "$" or
/// "元", percent spellings to "%", ASCII is lower-cased.
std::string canonical_unit(std::string_view unit);

}  // namespace mathforge::units
