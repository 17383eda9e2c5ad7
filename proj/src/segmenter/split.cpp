#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include "../common/utf8.hpp"
#include "dqa/errors.hpp"
#include "dqa/segmenter.hpp"
#include "dqa/tsv.hpp"

namespace dqa {

std::vector<std::string> default_abbreviations() {
  return {"Inc.", "Ltd.", "Corp.", "Co.", "U.S.", "U.K.", "Mr.", "Ms.", "Mrs.", "Dr.", "No.", "Nos.",
          "Fig.", "Figs.", "approx.", "e.g.", "i.e.", "vs.", "St.", "Jr.", "Sr.", "Ltd", "plc."};
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\n'; }
bool is_terminal(char c) { return c == '.' || c == '?' || c == '!'; }

bool is_closer(std::string_view s, std::size_t pos, std::size_t* len) {
  static constexpr std::string_view closers[] = {"\"", "'", ")", "]", "”", "’"};
  for (auto c : closers) {
    if (s.substr(pos, c.size()) == c) {
      *len = c.size();
      return true;
    }
  }
  return false;
}

bool is_opener(std::string_view s, std::size_t pos, std::size_t* len) {
  static constexpr std::string_view openers[] = {"\"", "'", "(", "[", "“", "‘"};
  for (auto c : openers) {
    if (s.substr(pos, c.size()) == c) {
      *len = c.size();
      return true;
    }
  }
  return false;
}

// Upper-case letter or digit, optionally behind one opening quote/bracket.
bool starts_sentence(std::string_view s, std::size_t pos) {
  std::size_t len;
  if (is_opener(s, pos, &len)) pos += len;
  if (pos >= s.size()) return false;
  char32_t cp = utf8::next(s, pos);
  return utf8::is_upper(cp) || utf8::is_digit(cp);
}

// "J." or "U.S." style: one or more single upper-case letters each followed by '.'.
bool is_initials(std::string_view token) {
  if (token.size() < 2 || token.size() % 2) return false;
  for (std::size_t i = 0; i < token.size(); i += 2) {
    if (!(token[i] >= 'A' && token[i] <= 'Z') || token[i + 1] != '.') return false;
  }
  return true;
}

class Splitter {
 public:
  Splitter(const RawDocument& doc, const SegmenterConfig& config) : doc_(doc), config_(config) {}

  SegmentResult run() {
    std::string_view s = doc_.text;
    std::size_t seg_start = 0;
    std::size_t i = 0;
    while (i < s.size()) {
      const char c = s[i];
      if (c == '\n' && i + 1 < s.size() && s[i + 1] == '\n') {
        emit(seg_start, i);
        while (i < s.size() && s[i] == '\n') ++i;
        seg_start = i;
        continue;
      }
      if (!is_terminal(c)) {
        ++i;
        continue;
      }
      std::size_t end = i + 1;
      while (end < s.size() && is_terminal(s[end])) ++end;
      std::size_t len;
      while (end < s.size() && is_closer(s, end, &len)) end += len;
      if (end >= s.size()) {
        emit(seg_start, end);
        seg_start = i = end;
        break;
      }
      if (!is_space(s[end])) {
        i = end;
        continue;
      }
      std::size_t next = end;
      bool blank_line = false;
      while (next < s.size() && is_space(s[next])) {
        if (s[next] == '\n' && next + 1 < s.size() && s[next + 1] == '\n') blank_line = true;
        ++next;
      }
      bool boundary = blank_line || next >= s.size() || starts_sentence(s, next);
      if (boundary && !blank_line && s[end - 1] == '.' && suppressed_period(seg_start, i)) boundary = false;
      if (boundary) {
        emit(seg_start, end);
        seg_start = next;
        i = next;
      } else {
        i = end;
      }
    }
    emit(seg_start, s.size());
    return std::move(result_);
  }

 private:
  // The period at `dot` belongs to an abbreviation or initials.
  bool suppressed_period(std::size_t seg_start, std::size_t dot) const {
    std::string_view s = doc_.text;
    std::size_t begin = dot;
    while (begin > seg_start && !is_space(s[begin - 1])) --begin;
    std::string_view token = s.substr(begin, dot + 1 - begin);
    while (!token.empty()) {
      std::size_t len;
      if (is_opener(token, 0, &len)) {
        token.remove_prefix(len);
      } else {
        break;
      }
    }
    if (is_initials(token)) return true;
    return std::find(config_.abbreviations.begin(), config_.abbreviations.end(), token) !=
           config_.abbreviations.end();
  }

  void emit(std::size_t begin, std::size_t end) {
    std::string_view s = doc_.text;
    end = std::min(end, s.size());
    while (begin < end && is_space(s[begin])) ++begin;
    while (end > begin && is_space(s[end - 1])) --end;
    if (begin >= end) return;
    std::string_view text = s.substr(begin, end - begin);
    const std::size_t n = count_code_points(text);
    if (n < config_.min_len) {
      ++result_.dropped_short;
      return;
    }
    if (n > config_.max_len) {
      ++result_.dropped_long;
      return;
    }
    Sentence sent;
    sent.sent_id = result_.sentences.size();
    sent.doc_id = doc_.doc_id;
    sent.text = std::string(text);
    sent.start = begin;
    sent.end = end;
    result_.sentences.push_back(std::move(sent));
  }

  const RawDocument& doc_;
  const SegmenterConfig& config_;
  SegmentResult result_;
};

}  // namespace

SegmentResult split_sentences(const RawDocument& doc, const SegmenterConfig& config) {
  return Splitter(doc, config).run();
}

std::size_t write_sentences_tsv(std::span<const Sentence> sentences, std::ostream& out) {
  out << "doc_id\tsent_id\tstart\tend\ttext\n";
  for (const Sentence& s : sentences) {
    out << tsv_field(s.doc_id) << '\t' << s.sent_id << '\t' << s.start << '\t' << s.end << '\t'
        << tsv_field(s.text) << '\n';
  }
  out.flush();
  if (!out) throw IoError("failed to write sentence TSV");
  return sentences.size();
}

std::vector<Sentence> read_sentences_tsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_tsv_line(line) != std::vector<std::string>{"doc_id", "sent_id", "start", "end", "text"}) {
    throw FormatError("sentence TSV: missing or unexpected header");
  }
  std::vector<Sentence> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_tsv_line(line);
    if (f.size() != 5) throw FormatError("sentence TSV line " + std::to_string(line_no) + ": expected 5 fields");
    Sentence s;
    try {
      s.doc_id = f[0];
      s.sent_id = std::stoull(f[1]);
      s.start = std::stoull(f[2]);
      s.end = std::stoull(f[3]);
    } catch (const std::exception&) {
      throw FormatError("sentence TSV line " + std::to_string(line_no) + ": bad integer field");
    }
    s.text = f[4];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dqa
