#include "document.hpp"

#include <algorithm>
#include <memory>

#include "filters.hpp"

namespace dqa::pdf {

namespace {

constexpr std::size_t kNoOffset = static_cast<std::size_t>(-1);
constexpr int kMaxRefChain = 32;
constexpr int kMaxPageTreeDepth = 64;

std::size_t to_offset(const Object* o, std::size_t limit) {
  if (!o) return kNoOffset;
  auto i = o->integer();
  if (!i || *i < 0 || static_cast<std::uint64_t>(*i) >= limit) return kNoOffset;
  return static_cast<std::size_t>(*i);
}

bool is_name(const Object* o, std::string_view n) {
  return o && o->name() && o->name()->value == n;
}

}  // namespace

Document::Document(std::string_view data, const PdfExtractOptions& options)
    : data_(data), options_(options) {
  std::size_t sx = data_.rfind("startxref");
  if (sx == std::string_view::npos) throw MalformedPdf("missing startxref", static_cast<std::int64_t>(data_.size()));
  Lexer lex(data_);
  lex.seek(sx + 9);
  Object off = lex.read_object(false);
  std::size_t xref_offset = to_offset(&off, data_.size());
  if (xref_offset == kNoOffset) throw MalformedPdf("bad startxref offset", static_cast<std::int64_t>(sx));
  read_xref_chain(xref_offset);
  if (!trailer_) throw MalformedPdf("missing trailer", static_cast<std::int64_t>(xref_offset));
  if (trailer_->find("Encrypt")) throw UnsupportedPdf("encrypted documents are not supported", static_cast<std::int64_t>(xref_offset));
}

void Document::read_xref_chain(std::size_t offset) {
  std::set<std::size_t> visited;
  while (offset != kNoOffset) {
    if (!visited.insert(offset).second) throw MalformedPdf("cyclic /Prev chain", static_cast<std::int64_t>(offset));
    Lexer probe(data_);
    probe.seek(offset);
    probe.skip_whitespace();
    if (probe.data().substr(probe.pos(), 4) == "xref") {
      offset = read_xref_table(probe.pos());
    } else {
      offset = read_xref_stream(offset);
    }
  }
}

DictPtr Document::absorb_trailer(const DictData& trailer, std::size_t* prev, std::size_t* xref_stm) {
  *prev = to_offset(trailer.find("Prev"), data_.size());
  if (xref_stm) *xref_stm = to_offset(trailer.find("XRefStm"), data_.size());
  auto copy = std::make_shared<DictData>(trailer);
  // The newest trailer wins; older ones only fill gaps.
  if (!trailer_) {
    trailer_ = copy;
  } else {
    auto merged = std::make_shared<DictData>(*trailer_);
    for (const auto& [k, v] : trailer.entries) {
      if (!merged->find(k)) merged->entries.emplace_back(k, v);
    }
    trailer_ = merged;
  }
  return copy;
}

std::size_t Document::read_xref_table(std::size_t offset) {
  Lexer lex(data_);
  lex.seek(offset);
  if (!lex.accept_keyword("xref")) lex.fail("expected xref");
  while (true) {
    if (lex.accept_keyword("trailer")) break;
    Object start = lex.read_object(false);
    Object count = lex.read_object(false);
    auto s = start.integer();
    auto c = count.integer();
    if (!s || !c || *s < 0 || *c < 0 || *s > UINT32_MAX) lex.fail("bad xref subsection header");
    if (static_cast<std::uint64_t>(*c) > data_.size() / 18 + 1) lex.fail("xref subsection larger than file");
    for (std::int64_t i = 0; i < *c; ++i) {
      Object off = lex.read_object(false);
      Object gen = lex.read_object(false);
      Object type = lex.read_object(false);
      auto o = off.integer();
      auto g = gen.integer();
      auto t = type.keyword();
      if (!o || !g || !t || (t->value != "n" && t->value != "f") || *o < 0 || *g < 0) {
        lex.fail("bad xref entry");
      }
      const std::uint64_t num = static_cast<std::uint64_t>(*s) + static_cast<std::uint64_t>(i);
      if (num > UINT32_MAX) lex.fail("object number out of range");
      XrefEntry e;
      if (t->value == "n") {
        e.kind = XrefEntry::Kind::InFile;
        e.offset = static_cast<std::uint64_t>(*o);
        e.gen = static_cast<std::uint32_t>(*g);
      }
      xref_.try_emplace(static_cast<std::uint32_t>(num), e);
    }
  }
  Object trailer = lex.read_object(true);
  if (!trailer.dict()) lex.fail("trailer is not a dictionary");
  std::size_t prev, xref_stm;
  absorb_trailer(*trailer.dict(), &prev, &xref_stm);
  if (xref_stm != kNoOffset) {
    // Hybrid file: the stream entries take precedence over older tables.
    read_xref_stream(xref_stm);
  }
  return prev;
}

std::size_t Document::read_xref_stream(std::size_t offset) {
  Object obj = parse_indirect_at(offset, nullptr);
  const StreamData* stream = obj.stream();
  if (!stream || !is_name(stream->dict.find("Type"), "XRef")) {
    throw MalformedPdf("startxref does not point to an xref table or stream", static_cast<std::int64_t>(offset));
  }
  const DictData& dict = stream->dict;
  const ArrayData* w = dict.find("W") ? dict.find("W")->array() : nullptr;
  if (!w || w->items.size() != 3) throw MalformedPdf("xref stream without /W", stream->offset);
  std::size_t widths[3];
  for (int i = 0; i < 3; ++i) {
    auto v = w->items[i].integer();
    if (!v || *v < 0 || *v > 8) throw MalformedPdf("bad /W entry", stream->offset);
    widths[i] = static_cast<std::size_t>(*v);
  }
  const std::size_t row = widths[0] + widths[1] + widths[2];
  if (row == 0) throw MalformedPdf("empty xref stream rows", stream->offset);

  std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
  auto size = dict.find("Size") ? dict.find("Size")->integer() : nullptr;
  if (const Object* idx = dict.find("Index"); idx && idx->array()) {
    const auto& items = idx->array()->items;
    for (std::size_t i = 0; i + 1 < items.size(); i += 2) {
      auto a = items[i].integer();
      auto b = items[i + 1].integer();
      if (!a || !b || *a < 0 || *b < 0) throw MalformedPdf("bad /Index", stream->offset);
      ranges.emplace_back(*a, *b);
    }
  } else {
    if (!size || *size < 0) throw MalformedPdf("xref stream without /Size", stream->offset);
    ranges.emplace_back(0, *size);
  }

  const std::string body = decode_stream(*stream);
  std::size_t pos = 0;
  auto field = [&](std::size_t width, std::uint64_t fallback) {
    if (width == 0) return fallback;
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v = (v << 8) | static_cast<unsigned char>(body[pos++]);
    return v;
  };
  for (auto [first, count] : ranges) {
    for (std::int64_t i = 0; i < count; ++i) {
      if (pos + row > body.size()) throw MalformedPdf("xref stream shorter than /Index", stream->offset);
      const std::uint64_t type = field(widths[0], 1);
      const std::uint64_t f2 = field(widths[1], 0);
      const std::uint64_t f3 = field(widths[2], 0);
      const std::uint64_t num = static_cast<std::uint64_t>(first) + static_cast<std::uint64_t>(i);
      if (num > UINT32_MAX) throw MalformedPdf("object number out of range", stream->offset);
      XrefEntry e;
      if (type == 1) {
        e.kind = XrefEntry::Kind::InFile;
        e.offset = f2;
        e.gen = static_cast<std::uint32_t>(f3);
      } else if (type == 2) {
        if (f2 > UINT32_MAX || f3 > UINT32_MAX) throw MalformedPdf("bad compressed entry", stream->offset);
        e.kind = XrefEntry::Kind::Compressed;
        e.offset = f2;
        e.index = static_cast<std::uint32_t>(f3);
      }
      xref_.try_emplace(static_cast<std::uint32_t>(num), e);
    }
  }
  std::size_t prev;
  absorb_trailer(dict, &prev, nullptr);
  return prev;
}

Object Document::parse_indirect_at(std::size_t offset, const Ref* expected) {
  if (offset >= data_.size()) throw MalformedPdf("object offset past end of file", static_cast<std::int64_t>(offset));
  Lexer lex(data_);
  lex.seek(offset);
  Object num = lex.read_object(false);
  Object gen = lex.read_object(false);
  auto n = num.integer();
  auto g = gen.integer();
  if (!n || !g || !lex.accept_keyword("obj")) lex.fail("expected 'n g obj'");
  if (expected && (*n != expected->num)) {
    lex.fail("xref points to object " + std::to_string(*n) + " instead of " + std::to_string(expected->num));
  }
  Object value = lex.read_object(true);
  if (value.keyword()) {
    if (value.keyword()->value == "endobj") return Object{Null{}};
    lex.fail("unexpected keyword in object body");
  }
  const DictData* dict = value.dict();
  if (!dict || !lex.accept_keyword("stream")) return value;

  std::size_t start = lex.pos();
  if (start < data_.size() && data_[start] == '\r') ++start;
  if (start < data_.size() && data_[start] == '\n') ++start;

  std::size_t length = kNoOffset;
  if (const Object* len = dict->find("Length")) {
    Object resolved = len->ref() ? resolve(*len) : *len;
    if (auto i = resolved.integer(); i && *i >= 0) length = static_cast<std::size_t>(*i);
  }
  std::size_t end = kNoOffset;
  if (length != kNoOffset && length <= data_.size() - start) {
    Lexer check(data_);
    check.seek(start + length);
    if (check.accept_keyword("endstream")) end = start + length;
  }
  if (end == kNoOffset) {
    // Wrong or missing /Length: fall back to scanning for the terminator.
    std::size_t found = data_.find("endstream", start);
    if (found == std::string_view::npos) throw MalformedPdf("unterminated stream", static_cast<std::int64_t>(start));
    end = found;
    while (end > start && (data_[end - 1] == '\n' || data_[end - 1] == '\r')) --end;
  }
  auto stream = std::make_shared<StreamData>();
  stream->dict = *dict;
  stream->raw = std::string(data_.substr(start, end - start));
  stream->offset = static_cast<std::int64_t>(start);
  return Object{StreamPtr(std::move(stream))};
}

Object Document::load(const Ref& ref) {
  if (auto it = cache_.find(ref.num); it != cache_.end()) return it->second;
  auto entry = xref_.find(ref.num);
  if (entry == xref_.end() || entry->second.kind == XrefEntry::Kind::Free) return Object{Null{}};
  if (loading_.size() >= static_cast<std::size_t>(kMaxRefChain)) {
    throw MalformedPdf("object loading nested too deeply at object " + std::to_string(ref.num), 0);
  }
  if (!loading_.insert(ref.num).second) {
    throw MalformedPdf("circular reference to object " + std::to_string(ref.num), 0);
  }
  struct Unmark {
    std::set<std::uint32_t>& s;
    std::uint32_t n;
    ~Unmark() { s.erase(n); }
  } unmark{loading_, ref.num};

  Object obj;
  if (entry->second.kind == XrefEntry::Kind::InFile) {
    if (entry->second.offset >= data_.size()) {
      throw MalformedPdf("object " + std::to_string(ref.num) + " offset past end of file",
                         static_cast<std::int64_t>(entry->second.offset));
    }
    obj = parse_indirect_at(static_cast<std::size_t>(entry->second.offset), &ref);
  } else {
    if (entry->second.offset > UINT32_MAX) throw MalformedPdf("bad object stream number", 0);
    obj = load_compressed(static_cast<std::uint32_t>(entry->second.offset), entry->second.index, ref.num);
  }
  cache_[ref.num] = obj;
  return obj;
}

Object Document::load_compressed(std::uint32_t stream_num, std::uint32_t index, std::uint32_t num) {
  auto cached = objstm_cache_.find(stream_num);
  Object container = load(Ref{stream_num, 0});
  const StreamData* stream = container.stream();
  if (!stream) throw MalformedPdf("object stream " + std::to_string(stream_num) + " is not a stream", 0);
  if (cached == objstm_cache_.end()) {
    cached = objstm_cache_.emplace(stream_num, decode_stream(*stream)).first;
  }
  const std::string& body = cached->second;
  auto n = stream->dict.find("N") ? stream->dict.find("N")->integer() : nullptr;
  auto first = stream->dict.find("First") ? stream->dict.find("First")->integer() : nullptr;
  if (!n || !first || *n < 0 || *first < 0 || static_cast<std::uint64_t>(*first) > body.size() ||
      index >= static_cast<std::uint64_t>(*n)) {
    throw MalformedPdf("bad object stream header", stream->offset);
  }
  Lexer header(body, stream->offset);
  std::int64_t obj_offset = -1;
  for (std::uint32_t i = 0; i <= index; ++i) {
    Object on = header.read_object(false);
    Object oo = header.read_object(false);
    if (!on.integer() || !oo.integer()) header.fail("bad object stream index");
    if (i == index) {
      if (*on.integer() != num) header.fail("object stream index mismatch");
      obj_offset = *oo.integer();
    }
  }
  const std::uint64_t at = static_cast<std::uint64_t>(*first) + static_cast<std::uint64_t>(obj_offset);
  if (obj_offset < 0 || at >= body.size()) throw MalformedPdf("object stream offset out of range", stream->offset);
  Lexer lex(body, stream->offset);
  lex.seek(static_cast<std::size_t>(at));
  Object value = lex.read_object(true);
  if (value.keyword()) lex.fail("unexpected keyword in object stream");
  return value;
}

Object Document::resolve(const Object& obj) {
  Object cur = obj;
  for (int i = 0; i < kMaxRefChain; ++i) {
    const Ref* r = cur.ref();
    if (!r) return cur;
    cur = load(*r);
  }
  throw MalformedPdf("reference chain too long", 0);
}

std::string Document::decode_stream(const StreamData& stream) {
  Object filter = stream.dict.find("Filter") ? resolve(*stream.dict.find("Filter")) : Object{Null{}};
  Object parms = stream.dict.find("DecodeParms") ? resolve(*stream.dict.find("DecodeParms")) : Object{Null{}};
  std::vector<FilterStep> steps;
  std::vector<Object> keep_alive;
  auto param_at = [&](std::size_t i) -> const DictData* {
    if (const ArrayData* a = parms.array()) {
      if (i >= a->items.size()) return nullptr;
      keep_alive.push_back(resolve(a->items[i]));
      return keep_alive.back().dict();
    }
    return i == 0 ? parms.dict() : nullptr;
  };
  if (const Name* n = filter.name()) {
    steps.push_back({n->value, param_at(0)});
  } else if (const ArrayData* a = filter.array()) {
    keep_alive.reserve(a->items.size() * 2 + 1);
    for (std::size_t i = 0; i < a->items.size(); ++i) {
      Object f = resolve(a->items[i]);
      if (!f.name()) throw MalformedPdf("filter is not a name", stream.offset);
      steps.push_back({f.name()->value, nullptr});
      steps.back().params = param_at(i);
    }
  } else if (!filter.is_null()) {
    throw MalformedPdf("bad /Filter", stream.offset);
  }
  std::string data = stream.raw;
  for (const auto& step : steps) {
    data = apply_filter(data, step, options_.max_stream_bytes, stream.offset);
  }
  return data;
}

void Document::collect_pages(const Object& node_ref, const Object& inherited, std::set<std::uint32_t>& seen,
                             std::vector<Page>& out, int depth, std::uint32_t node_num) {
  if (depth > kMaxPageTreeDepth) throw MalformedPdf("page tree too deep", 0);
  if (node_num != 0 && !seen.insert(node_num).second) throw MalformedPdf("cycle in page tree", 0);
  Object node = resolve(node_ref);
  const DictData* dict = node.dict();
  if (!dict) throw MalformedPdf("page tree node is not a dictionary (object " + std::to_string(node_num) + ")", 0);
  Object resources = inherited;
  if (const Object* r = dict->find("Resources")) resources = resolve(*r);

  const Object* kids = dict->find("Kids");
  const Object* type = dict->find("Type");
  if (kids && !is_name(type, "Page")) {
    Object kids_obj = resolve(*kids);
    const ArrayData* arr = kids_obj.array();
    if (!arr) throw MalformedPdf("/Kids is not an array", 0);
    for (const Object& kid : arr->items) {
      std::uint32_t num = kid.ref() ? kid.ref()->num : 0;
      collect_pages(kid, resources, seen, out, depth + 1, num);
    }
    return;
  }
  out.push_back(Page{node, resources});
}

std::vector<Page> Document::pages() {
  const Object* root_ref = trailer_->find("Root");
  if (!root_ref) throw MalformedPdf("trailer without /Root", 0);
  Object root = resolve(*root_ref);
  if (!root.dict()) throw MalformedPdf("/Root is not a dictionary", 0);
  const Object* pages = root.dict()->find("Pages");
  if (!pages) throw MalformedPdf("catalog without /Pages", 0);
  std::vector<Page> out;
  std::set<std::uint32_t> seen;
  collect_pages(*pages, Object{Null{}}, seen, out, 0, pages->ref() ? pages->ref()->num : 0);
  return out;
}

std::string Document::page_contents(const Page& page) {
  const DictData* dict = page.dict.dict();
  const Object* contents = dict ? dict->find("Contents") : nullptr;
  if (!contents) return {};
  Object c = resolve(*contents);
  std::string out;
  if (const StreamData* s = c.stream()) return decode_stream(*s);
  if (const ArrayData* a = c.array()) {
    for (const Object& part : a->items) {
      Object p = resolve(part);
      if (const StreamData* s = p.stream()) {
        if (!out.empty()) out.push_back('\n');
        out += decode_stream(*s);
      }
    }
    return out;
  }
  if (c.is_null()) return {};
  throw MalformedPdf("page /Contents is neither a stream nor an array", 0);
}

}  // namespace dqa::pdf
