#include "encodings.hpp"

#include <algorithm>
#include <charconv>

namespace dqa::pdf {

namespace {

std::optional<char32_t> parse_hex_cp(std::string_view digits) {
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, 16);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  if (value == 0 || value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) return std::nullopt;
  return static_cast<char32_t>(value);
}

}  // namespace

std::optional<char32_t> glyph_to_unicode(std::string_view name) {
  // "a.sc", "T_h" style suffixes: use the base glyph.
  if (auto dot = name.find('.'); dot != std::string_view::npos && dot > 0) {
    name = name.substr(0, dot);
  }
  auto it = std::lower_bound(kGlyphNames.begin(), kGlyphNames.end(), name,
                             [](const GlyphName& g, std::string_view n) { return g.name < n; });
  if (it != kGlyphNames.end() && it->name == name) return it->code_point;
  if (name.size() == 7 && name.starts_with("uni")) return parse_hex_cp(name.substr(3));
  if (name.size() >= 5 && name.size() <= 7 && name[0] == 'u') return parse_hex_cp(name.substr(1));
  return std::nullopt;
}

}  // namespace dqa::pdf
