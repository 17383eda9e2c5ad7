#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "document.hpp"

namespace dqa::pdf {

// Parsed /ToUnicode CMap.
class ToUnicodeMap {
 public:
  static ToUnicodeMap parse(std::string_view cmap);

  bool empty() const { return map_.empty(); }
  // Splits `bytes` into codes using the codespace ranges (or `default_width`
  // bytes per code when none were declared) and appends their Unicode text.
  void decode(std::string_view bytes, int default_width, std::string& out,
              const std::array<char32_t, 256>* fallback) const;

 private:
  struct Range {
    int width;
    std::uint32_t lo, hi;
  };
  std::vector<Range> codespace_;
  std::map<std::uint64_t, std::u32string> map_;  // (width << 32 | code) -> text
};

// Maps string bytes of one font to UTF-8.
class FontDecoder {
 public:
  static FontDecoder from_font(Document& doc, const Object& font);
  static FontDecoder standard();

  std::string decode(std::string_view bytes) const;

 private:
  bool composite_ = false;
  std::array<char32_t, 256> encoding_{};
  ToUnicodeMap to_unicode_;
};

}  // namespace dqa::pdf
