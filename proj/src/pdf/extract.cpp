#include <iconv.h>

#include <cerrno>
#include <memory>

#include "../common/utf8.hpp"
#include "content.hpp"
#include "document.hpp"
#include "dqa/pdf_extract.hpp"

namespace dqa {

bool looks_like_pdf(std::string_view bytes) { return bytes.starts_with("%PDF-"); }

RawDocument extract_pdf_text(std::string_view bytes, const PdfExtractOptions& options) {
  if (!looks_like_pdf(bytes)) throw MalformedPdf("missing %PDF- header", 0);
  pdf::Document doc(bytes, options);
  RawDocument out;
  for (const pdf::Page& page : doc.pages()) {
    pdf::TextSink sink;
    pdf::ContentInterpreter interp(doc, sink);
    interp.run(doc.page_contents(page), page.resources);
    std::string text = sink.take();
    while (!text.empty() && (text.back() == ' ' || text.back() == '\n')) text.pop_back();
    if (text.empty()) continue;
    if (!out.text.empty()) out.text += "\n\n";
    out.page_breaks.push_back(out.text.size());
    out.text += text;
  }
  return out;
}

namespace {

std::string normalize_line_endings(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\r') {
      out.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else if (c != '\0') {
      out.push_back(c);
    }
  }
  return out;
}

std::string convert_encoding(std::string_view bytes, const std::string& from) {
  iconv_t cd = iconv_open("UTF-8", from.c_str());
  if (cd == reinterpret_cast<iconv_t>(-1)) throw DecodeError("unknown encoding '" + from + "'");
  std::unique_ptr<void, int (*)(iconv_t)> guard(cd, iconv_close);
  std::string out;
  std::string input(bytes);
  char* in = input.data();
  std::size_t in_left = input.size();
  char buf[4096];
  while (in_left > 0) {
    char* o = buf;
    std::size_t o_left = sizeof(buf);
    std::size_t r = iconv(cd, &in, &in_left, &o, &o_left);
    out.append(buf, sizeof(buf) - o_left);
    if (r == static_cast<std::size_t>(-1) && errno != E2BIG) {
      throw DecodeError("invalid " + from + " byte sequence at offset " +
                        std::to_string(input.size() - in_left));
    }
  }
  return out;
}

}  // namespace

RawDocument extract_plain_text(std::string_view bytes, const std::optional<std::string>& encoding_hint) {
  std::string text;
  if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
  if (utf8::valid(bytes)) {
    text = std::string(bytes);
  } else if (encoding_hint && !encoding_hint->empty()) {
    text = convert_encoding(bytes, *encoding_hint);
  } else {
    std::size_t pos = 0;
    while (pos < bytes.size()) {
      std::size_t start = pos;
      if (utf8::next(bytes, pos) == 0xFFFD && bytes.substr(start, 3) != "\xEF\xBF\xBD") {
        throw DecodeError("invalid UTF-8 at byte " + std::to_string(start));
      }
    }
  }
  RawDocument out;
  out.text = normalize_line_endings(text);
  if (!out.text.empty()) out.page_breaks.push_back(0);
  return out;
}

RawDocument extract_document(std::string_view bytes, const PdfExtractOptions& options) {
  if (looks_like_pdf(bytes)) return extract_pdf_text(bytes, options);
  return extract_plain_text(bytes);
}

}  // namespace dqa
