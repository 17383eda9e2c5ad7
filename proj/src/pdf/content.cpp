#include "content.hpp"

#include <cmath>
#include <vector>

namespace dqa::pdf {

namespace {

constexpr std::size_t kMaxOperands = 4096;
constexpr int kMaxFormDepth = 8;

const DictData* sub_dict(Document& doc, const Object& resources, std::string_view key, Object& hold) {
  const DictData* res = resources.dict();
  if (!res) return nullptr;
  const Object* entry = res->find(key);
  if (!entry) return nullptr;
  hold = doc.resolve(*entry);
  return hold.dict();
}

// Skips inline image data: everything up to the whitespace-delimited EI.
void skip_inline_image(Lexer& lex) {
  std::string_view d = lex.data();
  std::size_t id = lex.pos();
  while (true) {
    id = d.find("ID", id);
    if (id == std::string_view::npos) {
      lex.seek(d.size());
      return;
    }
    if ((id == 0 || is_whitespace(d[id - 1])) && (id + 2 >= d.size() || is_whitespace(d[id + 2]))) break;
    id += 2;
  }
  std::size_t p = id + 3;
  while (true) {
    std::size_t ei = d.find("EI", p);
    if (ei == std::string_view::npos) {
      lex.seek(d.size());
      return;
    }
    if (is_whitespace(d[ei - 1]) && (ei + 2 >= d.size() || is_whitespace(d[ei + 2]) || is_delimiter(d[ei + 2]))) {
      lex.seek(ei + 2);
      return;
    }
    p = ei + 2;
  }
}

}  // namespace

void TextSink::text(std::string_view utf8) {
  if (utf8.empty()) return;
  if (!out_.empty()) {
    if (pending_break_) {
      while (!out_.empty() && out_.back() == ' ') out_.pop_back();
      out_.push_back('\n');
    } else if (pending_space_ && out_.back() != ' ' && utf8.front() != ' ') {
      out_.push_back(' ');
    }
  }
  pending_break_ = pending_space_ = false;
  out_.append(utf8);
}

const FontDecoder& ContentInterpreter::font(const Object& resources, const std::string& name) {
  Object fonts_hold;
  const DictData* fonts = sub_dict(doc_, resources, "Font", fonts_hold);
  const Object* entry = fonts ? fonts->find(name) : nullptr;
  if (!entry) return fallback_;
  Object font_obj = doc_.resolve(*entry);
  const void* key = font_obj.dict();
  if (!key) return fallback_;
  auto it = fonts_.find(key);
  if (it == fonts_.end()) {
    it = fonts_.emplace(key, FontDecoder::from_font(doc_, font_obj)).first;
  }
  return it->second;
}

void ContentInterpreter::show(std::string_view bytes) {
  const FontDecoder& f = current_ ? *current_ : fallback_;
  sink_.text(f.decode(bytes));
}

void ContentInterpreter::run_form(const Object& resources, const std::string& name, int depth) {
  if (depth >= kMaxFormDepth) return;
  Object xobjects_hold;
  const DictData* xobjects = sub_dict(doc_, resources, "XObject", xobjects_hold);
  const Object* entry = xobjects ? xobjects->find(name) : nullptr;
  if (!entry) return;
  Object xobj = doc_.resolve(*entry);
  const StreamData* stream = xobj.stream();
  if (!stream) return;
  const Object* subtype = stream->dict.find("Subtype");
  if (!subtype || !subtype->name() || subtype->name()->value != "Form") return;
  Object form_resources = resources;
  if (const Object* r = stream->dict.find("Resources")) form_resources = doc_.resolve(*r);
  const std::string body = doc_.decode_stream(*stream);
  const FontDecoder* saved = current_;
  run(body, form_resources, depth + 1);
  current_ = saved;
}

void ContentInterpreter::run(std::string_view content, const Object& resources, int depth) {
  Lexer lex(content);
  std::vector<Object> operands;
  const double threshold = doc_.options().kerning_space_threshold;
  try {
    while (!lex.at_end()) {
      Object o = lex.read_object(false);
      const Keyword* kw = o.keyword();
      if (!kw) {
        if (operands.size() >= kMaxOperands) lex.fail("operand stack overflow");
        operands.push_back(std::move(o));
        continue;
      }
      const std::string& op = kw->value;
      if (op == "Tj") {
        if (!operands.empty() && operands.back().string()) show(operands.back().string()->bytes);
      } else if (op == "TJ") {
        if (!operands.empty()) {
          if (const ArrayData* arr = operands.back().array()) {
            for (const Object& item : arr->items) {
              double gap;
              if (const String* s = item.string()) {
                show(s->bytes);
              } else if (item.number(gap) && std::fabs(gap) > threshold) {
                sink_.word_gap();
              }
            }
          }
        }
      } else if (op == "'" || op == "\"") {
        sink_.line_break();
        if (!operands.empty() && operands.back().string()) show(operands.back().string()->bytes);
      } else if (op == "Td" || op == "TD" || op == "T*" || op == "Tm" || op == "ET") {
        sink_.line_break();
      } else if (op == "BT") {
        sink_.line_break();
      } else if (op == "Tf") {
        if (operands.size() >= 2 && operands[operands.size() - 2].name()) {
          current_ = &font(resources, operands[operands.size() - 2].name()->value);
        }
      } else if (op == "Do") {
        if (!operands.empty() && operands.back().name()) {
          sink_.line_break();
          run_form(resources, operands.back().name()->value, depth);
          sink_.line_break();
        }
      } else if (op == "BI") {
        skip_inline_image(lex);
      }
      operands.clear();
    }
  } catch (const MalformedPdf&) {
    // Damaged content stream: keep the text decoded so far.
  }
}

}  // namespace dqa::pdf
