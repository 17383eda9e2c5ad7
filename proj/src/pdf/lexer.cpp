#include <charconv>
#include <cmath>
#include <memory>

#include "objects.hpp"

namespace dqa::pdf {

bool is_whitespace(char c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0';
}

bool is_delimiter(char c) {
  switch (c) {
    case '(': case ')': case '<': case '>': case '[': case ']':
    case '{': case '}': case '/': case '%':
      return true;
    default:
      return false;
  }
}

namespace {

bool is_regular(char c) { return !is_whitespace(c) && !is_delimiter(c); }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool parse_integer(std::string_view tok, std::int64_t& out) {
  if (tok.empty()) return false;
  std::size_t i = 0;
  bool neg = false;
  if (tok[0] == '+' || tok[0] == '-') {
    neg = tok[0] == '-';
    i = 1;
  }
  if (i == tok.size()) return false;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data() + i, tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return false;
  out = neg ? -v : v;
  return true;
}

// PDF reals: optional sign, digits with at most one '.', no exponent.
bool parse_real(std::string_view tok, double& out) {
  std::size_t i = 0;
  bool neg = false;
  while (i < tok.size() && (tok[i] == '+' || tok[i] == '-')) {
    neg = neg != (tok[i] == '-');
    ++i;
  }
  bool digits = false, dot = false;
  double value = 0.0, scale = 1.0;
  for (; i < tok.size(); ++i) {
    char c = tok[i];
    if (c >= '0' && c <= '9') {
      digits = true;
      if (dot) {
        scale /= 10.0;
        value += (c - '0') * scale;
      } else {
        value = value * 10.0 + (c - '0');
      }
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  if (!digits || !std::isfinite(value)) return false;
  out = neg ? -value : value;
  return true;
}

}  // namespace

void Lexer::fail(const std::string& message) const { throw MalformedPdf(message, offset()); }

void Lexer::skip_whitespace() {
  while (pos_ < data_.size()) {
    char c = data_[pos_];
    if (is_whitespace(c)) {
      ++pos_;
    } else if (c == '%') {
      while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') ++pos_;
    } else {
      break;
    }
  }
}

std::string Lexer::read_regular_token() {
  std::size_t start = pos_;
  while (pos_ < data_.size() && is_regular(data_[pos_])) ++pos_;
  return std::string(data_.substr(start, pos_ - start));
}

bool Lexer::accept_keyword(std::string_view keyword) {
  std::size_t save = pos_;
  skip_whitespace();
  std::size_t start = pos_;
  while (pos_ < data_.size() && is_regular(data_[pos_])) ++pos_;
  if (data_.substr(start, pos_ - start) == keyword) return true;
  pos_ = save;
  return false;
}

Object Lexer::read_object(bool resolve_refs) { return read_object_at_depth(resolve_refs, 0); }

Object Lexer::read_object_at_depth(bool resolve_refs, int depth) {
  if (depth > kMaxNesting) fail("objects nested too deeply");
  skip_whitespace();
  if (pos_ >= data_.size()) fail("unexpected end of data");
  char c = data_[pos_];
  switch (c) {
    case '(':
      return Object{read_literal_string()};
    case '/':
      return Object{read_name()};
    case '[': {
      ++pos_;
      auto arr = std::make_shared<ArrayData>();
      while (true) {
        skip_whitespace();
        if (pos_ >= data_.size()) fail("unterminated array");
        if (data_[pos_] == ']') {
          ++pos_;
          break;
        }
        arr->items.push_back(read_object_at_depth(resolve_refs, depth + 1));
      }
      return Object{ArrayPtr(std::move(arr))};
    }
    case '<': {
      if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') {
        pos_ += 2;
        auto dict = std::make_shared<DictData>();
        while (true) {
          skip_whitespace();
          if (pos_ >= data_.size()) fail("unterminated dictionary");
          if (data_[pos_] == '>') {
            if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '>') {
              pos_ += 2;
              break;
            }
            fail("stray '>' in dictionary");
          }
          if (data_[pos_] != '/') fail("dictionary key is not a name");
          Name key = read_name();
          Object value = read_object_at_depth(resolve_refs, depth + 1);
          if (value.keyword()) fail("unexpected keyword in dictionary");
          dict->entries.emplace_back(std::move(key.value), std::move(value));
        }
        return Object{DictPtr(std::move(dict))};
      }
      return Object{read_hex_string()};
    }
    case ')':
    case '>':
    case ']':
    case '{':
    case '}':
      ++pos_;
      fail(std::string("unexpected delimiter '") + c + "'");
    default:
      break;
  }
  if ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.') {
    return read_number_or_ref(resolve_refs);
  }
  std::string tok = read_regular_token();
  if (tok.empty()) {
    ++pos_;
    fail("unexpected character");
  }
  if (tok == "true") return Object{true};
  if (tok == "false") return Object{false};
  if (tok == "null") return Object{Null{}};
  return Object{Keyword{std::move(tok)}};
}

Object Lexer::read_number_or_ref(bool resolve_refs) {
  std::size_t start = pos_;
  std::string tok = read_regular_token();
  std::int64_t iv;
  if (parse_integer(tok, iv)) {
    if (resolve_refs && iv >= 0) {
      // Look ahead for "gen R".
      std::size_t save = pos_;
      skip_whitespace();
      std::size_t gstart = pos_;
      std::string gen_tok = read_regular_token();
      std::int64_t gen;
      if (pos_ > gstart && parse_integer(gen_tok, gen) && gen >= 0 && gen <= 65535) {
        skip_whitespace();
        std::size_t rstart = pos_;
        std::string r = read_regular_token();
        if (r == "R" && pos_ > rstart && iv <= UINT32_MAX) {
          return Object{Ref{static_cast<std::uint32_t>(iv), static_cast<std::uint32_t>(gen)}};
        }
      }
      pos_ = save;
    }
    return Object{iv};
  }
  double dv;
  if (parse_real(tok, dv)) return Object{dv};
  pos_ = start + (tok.empty() ? 1 : tok.size());
  fail("bad number '" + tok.substr(0, 32) + "'");
}

String Lexer::read_literal_string() {
  ++pos_;  // (
  String out;
  int depth = 1;
  while (pos_ < data_.size()) {
    char c = data_[pos_++];
    if (c == '(') {
      ++depth;
      out.bytes.push_back(c);
    } else if (c == ')') {
      if (--depth == 0) return out;
      out.bytes.push_back(c);
    } else if (c == '\\') {
      if (pos_ >= data_.size()) break;
      char e = data_[pos_++];
      switch (e) {
        case 'n': out.bytes.push_back('\n'); break;
        case 'r': out.bytes.push_back('\r'); break;
        case 't': out.bytes.push_back('\t'); break;
        case 'b': out.bytes.push_back('\b'); break;
        case 'f': out.bytes.push_back('\f'); break;
        case '\r':
          if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
          break;
        case '\n':
          break;
        default:
          if (e >= '0' && e <= '7') {
            int v = e - '0';
            for (int k = 0; k < 2 && pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '7'; ++k) {
              v = v * 8 + (data_[pos_++] - '0');
            }
            out.bytes.push_back(static_cast<char>(v & 0xFF));
          } else {
            out.bytes.push_back(e);
          }
      }
    } else if (c == '\r') {
      // End-of-line in a literal string reads as a single '\n'.
      if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
      out.bytes.push_back('\n');
    } else {
      out.bytes.push_back(c);
    }
  }
  fail("unterminated string");
}

String Lexer::read_hex_string() {
  ++pos_;  // <
  String out;
  int pending = -1;
  while (pos_ < data_.size()) {
    char c = data_[pos_++];
    if (c == '>') {
      if (pending >= 0) out.bytes.push_back(static_cast<char>(pending << 4));
      return out;
    }
    if (is_whitespace(c)) continue;
    int v = hex_value(c);
    if (v < 0) fail("bad hex digit in string");
    if (pending < 0) {
      pending = v;
    } else {
      out.bytes.push_back(static_cast<char>((pending << 4) | v));
      pending = -1;
    }
  }
  fail("unterminated hex string");
}

Name Lexer::read_name() {
  ++pos_;  // /
  Name out;
  while (pos_ < data_.size() && is_regular(data_[pos_])) {
    char c = data_[pos_++];
    if (c == '#' && pos_ + 1 < data_.size()) {
      int hi = hex_value(data_[pos_]), lo = hex_value(data_[pos_ + 1]);
      if (hi >= 0 && lo >= 0) {
        out.value.push_back(static_cast<char>((hi << 4) | lo));
        pos_ += 2;
        continue;
      }
    }
    out.value.push_back(c);
  }
  return out;
}

}  // namespace dqa::pdf
