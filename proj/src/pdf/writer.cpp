#include <zlib.h>

#include <array>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "../common/utf8.hpp"
#include "dqa/pdf_writer.hpp"
#include "encodings.hpp"

namespace dqa {

namespace {

std::string to_winansi(std::string_view utf8_text) {
  static const std::map<char32_t, unsigned char> reverse = [] {
    std::map<char32_t, unsigned char> m;
    for (int c = 255; c >= 0x20; --c) {
      if (pdf::kWinAnsiEncoding[c] != 0) m[pdf::kWinAnsiEncoding[c]] = static_cast<unsigned char>(c);
    }
    return m;
  }();
  std::string out;
  std::size_t pos = 0;
  while (pos < utf8_text.size()) {
    char32_t cp = utf8::next(utf8_text, pos);
    auto it = reverse.find(cp);
    if (it == reverse.end()) throw std::invalid_argument("character not representable in WinAnsiEncoding");
    out.push_back(static_cast<char>(it->second));
  }
  return out;
}

std::string pdf_string(std::string_view utf8_text) {
  std::string out = "(";
  for (char c : to_winansi(utf8_text)) {
    if (c == '(' || c == ')' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back(')');
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(' ');
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(' ');
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words_of(std::string_view line) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) words.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string deflate_bytes(std::string_view data) {
  uLongf size = compressBound(static_cast<uLong>(data.size()));
  std::string out(size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &size, reinterpret_cast<const Bytef*>(data.data()),
                static_cast<uLong>(data.size()), 9) != Z_OK) {
    throw std::runtime_error("zlib compress failed");
  }
  out.resize(size);
  return out;
}

struct PendingObject {
  std::string body;      // dictionary or value text
  std::string stream;    // encoded stream payload, if any
  bool is_stream = false;
};

}  // namespace

PdfFixture write_pdf(const std::vector<std::vector<std::string>>& pages, const PdfWriterOptions& options) {
  PdfFixture fixture;
  std::vector<PendingObject> objects;  // object n is objects[n - 1]
  const std::size_t n_pages = pages.size();
  // 1 catalog, 2 pages root, 3 font, then (page, content) pairs.
  objects.resize(3 + 2 * n_pages);
  objects[0].body = "<< /Type /Catalog /Pages 2 0 R >>";
  std::string kids;
  for (std::size_t p = 0; p < n_pages; ++p) {
    kids += (p ? " " : "") + std::to_string(4 + 2 * p) + " 0 R";
  }
  objects[1].body = "<< /Type /Pages /Kids [" + kids + "] /Count " + std::to_string(n_pages) + " >>";
  objects[2].body = "<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /Encoding /WinAnsiEncoding >>";

  std::string expected;
  for (std::size_t p = 0; p < n_pages; ++p) {
    std::string content = "BT\n/F1 12 Tf\n14 TL\n";
    std::string page_text;
    std::size_t shown = 0;
    for (const std::string& raw_line : pages[p]) {
      const std::string line = trim(raw_line);
      std::string show;
      if (options.kerned_words) {
        auto words = words_of(line);
        if (!words.empty()) {
          show = "[";
          for (std::size_t w = 0; w < words.size(); ++w) {
            show += (w ? " -250 " : "") + pdf_string(words[w]);
          }
          show += "] TJ";
        }
        std::string joined;
        for (std::size_t w = 0; w < words.size(); ++w) joined += (w ? " " : "") + words[w];
        if (!joined.empty()) page_text += (page_text.empty() ? "" : "\n") + joined;
      } else if (!line.empty()) {
        show = pdf_string(line) + " Tj";
        page_text += (page_text.empty() ? "" : "\n") + line;
      }
      if (show.empty()) continue;
      // Exercise the different line-positioning operators.
      if (shown == 0) {
        content += "72 720 Td\n" + show + "\n";
      } else if (shown % 3 == 1) {
        content += "0 -14 Td\n" + show + "\n";
      } else if (shown % 3 == 2) {
        content += "T*\n" + show + "\n";
      } else if (!options.kerned_words) {
        content += pdf_string(line) + " '\n";
      } else {
        content += "T*\n" + show + "\n";
      }
      ++shown;
    }
    content += "ET\n";
    if (!page_text.empty()) {
      if (!expected.empty()) expected += "\n\n";
      expected += page_text;
    }
    PendingObject& page = objects[3 + 2 * p];
    page.body = "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Resources << /Font << /F1 3 0 R >> >> "
                "/Contents " + std::to_string(5 + 2 * p) + " 0 R >>";
    PendingObject& stream = objects[4 + 2 * p];
    stream.is_stream = true;
    if (options.compress) {
      stream.stream = deflate_bytes(content);
      stream.body = "<< /Length " + std::to_string(stream.stream.size()) + " /Filter /FlateDecode >>";
    } else {
      stream.stream = content;
      stream.body = "<< /Length " + std::to_string(content.size()) + " >>";
    }
  }

  const bool use_objstm = options.object_streams && options.xref_stream;
  std::string out = "%PDF-1.5\n%\xE2\xE3\xCF\xD3\n";
  const std::size_t total = objects.size() + (use_objstm ? 1 : 0) + (options.xref_stream ? 1 : 0);
  // xref rows: (type, field2, field3) per object number 0..total.
  std::vector<std::array<std::uint64_t, 3>> rows(total + 1, {0, 0, 65535});
  rows[0] = {0, 0, 65535};

  std::vector<std::size_t> packed;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::size_t num = i + 1;
    if (use_objstm && !objects[i].is_stream) {
      packed.push_back(num);
      continue;
    }
    rows[num] = {1, out.size(), 0};
    out += std::to_string(num) + " 0 obj\n" + objects[i].body + "\n";
    if (objects[i].is_stream) out += "stream\n" + objects[i].stream + "\nendstream\n";
    out += "endobj\n";
  }
  if (use_objstm) {
    const std::size_t num = objects.size() + 1;
    std::string header, bodies;
    for (std::size_t k = 0; k < packed.size(); ++k) {
      header += std::to_string(packed[k]) + " " + std::to_string(bodies.size()) + " ";
      bodies += objects[packed[k] - 1].body + "\n";
      rows[packed[k]] = {2, num, k};
    }
    std::string payload = deflate_bytes(header + bodies);
    rows[num] = {1, out.size(), 0};
    out += std::to_string(num) + " 0 obj\n<< /Type /ObjStm /N " + std::to_string(packed.size()) + " /First " +
           std::to_string(header.size()) + " /Filter /FlateDecode /Length " + std::to_string(payload.size()) +
           " >>\nstream\n" + payload + "\nendstream\nendobj\n";
  }

  const std::size_t xref_offset = out.size();
  if (options.xref_stream) {
    const std::size_t num = total;
    rows[num] = {1, xref_offset, 0};
    std::string data;
    for (const auto& r : rows) {
      data.push_back(static_cast<char>(r[0]));
      for (int b = 3; b >= 0; --b) data.push_back(static_cast<char>((r[1] >> (8 * b)) & 0xFF));
      data.push_back(static_cast<char>((r[2] >> 8) & 0xFF));
      data.push_back(static_cast<char>(r[2] & 0xFF));
    }
    std::string payload = deflate_bytes(data);
    out += std::to_string(num) + " 0 obj\n<< /Type /XRef /Size " + std::to_string(total + 1) +
           " /W [1 4 2] /Root 1 0 R /Filter /FlateDecode /Length " + std::to_string(payload.size()) +
           " >>\nstream\n" + payload + "\nendstream\nendobj\n";
  } else {
    out += "xref\n0 " + std::to_string(total + 1) + "\n";
    char line[32];
    for (std::size_t n = 0; n <= total; ++n) {
      if (rows[n][0] == 1) {
        std::snprintf(line, sizeof(line), "%010llu 00000 n \n", static_cast<unsigned long long>(rows[n][1]));
      } else {
        std::snprintf(line, sizeof(line), "%010d 65535 f \n", 0);
      }
      out += line;
    }
    out += "trailer\n<< /Size " + std::to_string(total + 1) + " /Root 1 0 R >>\n";
  }
  out += "startxref\n" + std::to_string(xref_offset) + "\n%%EOF\n";
  fixture.bytes = std::move(out);
  fixture.expected_text = std::move(expected);
  return fixture;
}

}  // namespace dqa
