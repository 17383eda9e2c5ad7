#include <utility>

#include "../common/utf8.hpp"
#include "dqa/segmenter.hpp"

namespace dqa {

namespace {

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\r') {
      if (i + 1 < s.size() && s[i + 1] == '\n') continue;
      c = '\n';
    } else if (c == '\f' || c == '\v') {
      c = '\n';
    } else if (c == '\t') {
      c = ' ';
    } else if (c == '\0') {
      continue;
    }
    if (c == ' ') {
      if (out.empty() || out.back() == ' ' || out.back() == '\n') continue;
      out.push_back(' ');
    } else if (c == '\n') {
      while (!out.empty() && out.back() == ' ') out.pop_back();
      out.push_back('\n');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

// "cli-\nmate" -> "climate": a hyphen after a letter, a single line break,
// then a lowercase letter.
std::string join_hyphenated(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '-' && i + 1 < s.size() && s[i + 1] == '\n' && i > 0 &&
        (i + 2 >= s.size() || s[i + 2] != '\n')) {
      std::size_t after = i + 2;
      const bool letter_before = utf8::is_alpha(utf8::prev(s, i));
      const bool lower_after = after < s.size() && utf8::is_lower(utf8::next(s, after));
      if (letter_before && lower_after) {
        i += 2;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

std::string collapse_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t run = 0;
  for (char c : s) {
    if (c == '\n') {
      if (++run > 2) continue;
    } else {
      run = 0;
    }
    out.push_back(c);
  }
  return out;
}

std::string trim_outer(std::string s) {
  std::size_t b = s.find_first_not_of(" \n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string normalize_text(std::string_view text) {
  return collapse_newlines(join_hyphenated(collapse_whitespace(utf8::nfc(text))));
}

RawDocument normalize_document(RawDocument doc) {
  std::vector<std::size_t> starts = doc.page_breaks;
  if (starts.empty() || starts.front() != 0) starts.insert(starts.begin(), 0);
  std::string text;
  std::vector<std::size_t> breaks;
  for (std::size_t p = 0; p < starts.size(); ++p) {
    const std::size_t begin = std::min(starts[p], doc.text.size());
    const std::size_t end = p + 1 < starts.size() ? std::min(starts[p + 1], doc.text.size()) : doc.text.size();
    if (end <= begin) continue;
    std::string page = trim_outer(normalize_text(std::string_view(doc.text).substr(begin, end - begin)));
    if (page.empty()) continue;
    if (!text.empty()) text += "\n\n";
    breaks.push_back(text.size());
    text += page;
  }
  doc.text = std::move(text);
  doc.page_breaks = std::move(breaks);
  return doc;
}

std::size_t count_code_points(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

}  // namespace dqa
