#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace dqa::pdf {

struct GlyphName {
  std::string_view name;
  char32_t code_point;
};

// Single-byte code -> Unicode; 0 marks an unmapped code.
extern const std::array<char32_t, 256> kStandardEncoding;
extern const std::array<char32_t, 256> kWinAnsiEncoding;
extern const std::array<char32_t, 256> kMacRomanEncoding;

// Sorted by name.
extern const std::array<GlyphName, 249> kGlyphNames;

// Resolves a glyph name from a /Differences array: the glyph list, then the
// uniXXXX and uXXXX[XX] conventions.
std::optional<char32_t> glyph_to_unicode(std::string_view name);

}  // namespace dqa::pdf
