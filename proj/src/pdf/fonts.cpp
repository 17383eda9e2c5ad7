#include "fonts.hpp"

#include "../common/utf8.hpp"
#include "encodings.hpp"

namespace dqa::pdf {

namespace {

constexpr std::size_t kMaxCMapEntries = 1 << 20;

std::uint32_t code_of(std::string_view bytes) {
  std::uint32_t v = 0;
  for (unsigned char c : bytes) v = (v << 8) | c;
  return v;
}

std::u32string utf16be_to_u32(std::string_view bytes) {
  std::u32string out;
  for (std::size_t i = 0; i + 1 < bytes.size(); i += 2) {
    char32_t u = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
    if (u >= 0xD800 && u <= 0xDBFF && i + 3 < bytes.size()) {
      char32_t lo = (static_cast<unsigned char>(bytes[i + 2]) << 8) | static_cast<unsigned char>(bytes[i + 3]);
      if (lo >= 0xDC00 && lo <= 0xDFFF) {
        out.push_back(0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00));
        i += 2;
        continue;
      }
    }
    out.push_back(u);
  }
  return out;
}

void append_text(std::string& out, char32_t cp) {
  if (cp == 0) return;
  if (cp < 0x20 || cp == 0x7F) {
    if (cp == '\t' || cp == '\n' || cp == '\r') out.push_back(' ');
    return;
  }
  utf8::append(out, cp);
}

}  // namespace

ToUnicodeMap ToUnicodeMap::parse(std::string_view cmap) {
  ToUnicodeMap m;
  Lexer lex(cmap);
  std::vector<Object> operands;
  std::size_t entries = 0;
  try {
    while (!lex.at_end()) {
      Object o = lex.read_object(false);
      const Keyword* kw = o.keyword();
      if (!kw) {
        if (operands.size() < 4096) operands.push_back(std::move(o));
        continue;
      }
      const std::string& op = kw->value;
      if (op == "endcodespacerange") {
        for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
          const String* lo = operands[i].string();
          const String* hi = operands[i + 1].string();
          if (!lo || !hi || lo->bytes.empty() || lo->bytes.size() > 4 || lo->bytes.size() != hi->bytes.size()) continue;
          m.codespace_.push_back({static_cast<int>(lo->bytes.size()), code_of(lo->bytes), code_of(hi->bytes)});
        }
      } else if (op == "endbfchar") {
        for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
          const String* src = operands[i].string();
          const String* dst = operands[i + 1].string();
          if (!src || !dst || src->bytes.empty() || src->bytes.size() > 4) continue;
          if (++entries > kMaxCMapEntries) break;
          const std::uint64_t key = (static_cast<std::uint64_t>(src->bytes.size()) << 32) | code_of(src->bytes);
          m.map_[key] = utf16be_to_u32(dst->bytes);
        }
      } else if (op == "endbfrange") {
        for (std::size_t i = 0; i + 2 < operands.size(); i += 3) {
          const String* lo = operands[i].string();
          const String* hi = operands[i + 1].string();
          if (!lo || !hi || lo->bytes.empty() || lo->bytes.size() > 4) continue;
          const std::uint32_t a = code_of(lo->bytes), b = code_of(hi->bytes);
          if (b < a || b - a > 0xFFFF) continue;
          const std::uint64_t width = lo->bytes.size();
          if (const String* dst = operands[i + 2].string()) {
            std::u32string base = utf16be_to_u32(dst->bytes);
            if (base.empty()) continue;
            for (std::uint32_t c = a; c <= b; ++c) {
              if (++entries > kMaxCMapEntries) break;
              std::u32string text = base;
              text.back() += (c - a);
              m.map_[(width << 32) | c] = std::move(text);
            }
          } else if (const ArrayData* arr = operands[i + 2].array()) {
            for (std::uint32_t c = a; c <= b && c - a < arr->items.size(); ++c) {
              const String* d = arr->items[c - a].string();
              if (!d || ++entries > kMaxCMapEntries) continue;
              m.map_[(width << 32) | c] = utf16be_to_u32(d->bytes);
            }
          }
        }
      }
      operands.clear();
    }
  } catch (const MalformedPdf&) {
    // Keep whatever mappings were read before the damage.
  }
  return m;
}

void ToUnicodeMap::decode(std::string_view bytes, int default_width, std::string& out,
                          const std::array<char32_t, 256>* fallback) const {
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    int width = 0;
    if (!codespace_.empty()) {
      for (int w = 1; w <= 4 && width == 0 && pos + static_cast<std::size_t>(w) <= bytes.size(); ++w) {
        const std::uint32_t code = code_of(bytes.substr(pos, static_cast<std::size_t>(w)));
        for (const Range& r : codespace_) {
          if (r.width == w && code >= r.lo && code <= r.hi) {
            width = w;
            break;
          }
        }
      }
    }
    if (width == 0) width = default_width;
    if (pos + static_cast<std::size_t>(width) > bytes.size()) break;
    const std::uint32_t code = code_of(bytes.substr(pos, static_cast<std::size_t>(width)));
    auto it = map_.find((static_cast<std::uint64_t>(width) << 32) | code);
    if (it != map_.end()) {
      for (char32_t cp : it->second) append_text(out, cp);
    } else if (fallback && width == 1) {
      append_text(out, (*fallback)[code & 0xFF]);
    }
    pos += static_cast<std::size_t>(width);
  }
}

FontDecoder FontDecoder::standard() {
  FontDecoder d;
  d.encoding_ = kStandardEncoding;
  return d;
}

FontDecoder FontDecoder::from_font(Document& doc, const Object& font_ref) {
  FontDecoder d = standard();
  Object font = doc.resolve(font_ref);
  const DictData* dict = font.dict();
  if (!dict) return d;

  const Object* subtype = dict->find("Subtype");
  d.composite_ = subtype && subtype->name() && subtype->name()->value == "Type0";

  if (const Object* enc_ref = dict->find("Encoding"); enc_ref && !d.composite_) {
    Object enc = doc.resolve(*enc_ref);
    auto base_of = [](std::string_view name) -> const std::array<char32_t, 256>* {
      if (name == "WinAnsiEncoding") return &kWinAnsiEncoding;
      if (name == "MacRomanEncoding") return &kMacRomanEncoding;
      if (name == "StandardEncoding") return &kStandardEncoding;
      return nullptr;
    };
    if (const Name* n = enc.name()) {
      if (auto* base = base_of(n->value)) d.encoding_ = *base;
    } else if (const DictData* ed = enc.dict()) {
      if (const Object* be = ed->find("BaseEncoding"); be && be->name()) {
        if (auto* base = base_of(be->name()->value)) d.encoding_ = *base;
      }
      if (const Object* diff_ref = ed->find("Differences")) {
        Object diffs = doc.resolve(*diff_ref);
        if (const ArrayData* arr = diffs.array()) {
          std::int64_t code = -1;
          for (const Object& item : arr->items) {
            if (auto i = item.integer()) {
              code = *i;
            } else if (const Name* gn = item.name()) {
              if (code >= 0 && code < 256) {
                d.encoding_[static_cast<std::size_t>(code)] = glyph_to_unicode(gn->value).value_or(0);
              }
              if (code >= 0) ++code;
            }
          }
        }
      }
    }
  }

  if (const Object* tu_ref = dict->find("ToUnicode")) {
    Object tu = doc.resolve(*tu_ref);
    if (const StreamData* s = tu.stream()) {
      d.to_unicode_ = ToUnicodeMap::parse(doc.decode_stream(*s));
    }
  }
  return d;
}

std::string FontDecoder::decode(std::string_view bytes) const {
  std::string out;
  if (composite_) {
    // CID-keyed fonts are only readable through their ToUnicode map.
    if (!to_unicode_.empty()) to_unicode_.decode(bytes, 2, out, nullptr);
    return out;
  }
  if (!to_unicode_.empty()) {
    to_unicode_.decode(bytes, 1, out, &encoding_);
    return out;
  }
  for (unsigned char c : bytes) append_text(out, encoding_[c]);
  return out;
}

}  // namespace dqa::pdf
