#pragma once

// PDF object model and tokenizer shared by the file-structure parser and the
// content-stream interpreter.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dqa/errors.hpp"

namespace dqa::pdf {

struct Null {};
struct Name {
  std::string value;  // without the leading '/', #xx escapes decoded
};
struct String {
  std::string bytes;
};
struct Ref {
  std::uint32_t num = 0;
  std::uint32_t gen = 0;
};
// Bare keyword; only meaningful in content streams (operators) and as
// structural markers (obj, stream, R) inside the file parser.
struct Keyword {
  std::string value;
};

struct Object;
struct ArrayData;
struct DictData;
struct StreamData;

using ArrayPtr = std::shared_ptr<const ArrayData>;
using DictPtr = std::shared_ptr<const DictData>;
using StreamPtr = std::shared_ptr<const StreamData>;

struct Object {
  std::variant<Null, bool, std::int64_t, double, String, Name, Ref, Keyword, ArrayPtr, DictPtr,
               StreamPtr>
      value;

  bool is_null() const { return std::holds_alternative<Null>(value); }
  const Name* name() const { return std::get_if<Name>(&value); }
  const String* string() const { return std::get_if<String>(&value); }
  const Ref* ref() const { return std::get_if<Ref>(&value); }
  const Keyword* keyword() const { return std::get_if<Keyword>(&value); }
  const ArrayData* array() const {
    auto p = std::get_if<ArrayPtr>(&value);
    return p ? p->get() : nullptr;
  }
  const DictData* dict() const;
  const StreamData* stream() const {
    auto p = std::get_if<StreamPtr>(&value);
    return p ? p->get() : nullptr;
  }
  // Integer or real as double.
  bool number(double& out) const {
    if (auto i = std::get_if<std::int64_t>(&value)) {
      out = static_cast<double>(*i);
      return true;
    }
    if (auto d = std::get_if<double>(&value)) {
      out = *d;
      return true;
    }
    return false;
  }
  const std::int64_t* integer() const { return std::get_if<std::int64_t>(&value); }
};

struct ArrayData {
  std::vector<Object> items;
};

struct DictData {
  std::vector<std::pair<std::string, Object>> entries;

  const Object* find(std::string_view key) const {
    for (const auto& [k, v] : entries) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

struct StreamData {
  DictData dict;
  std::string raw;  // still encoded
  std::int64_t offset = 0;
};

inline const DictData* Object::dict() const {
  if (auto p = std::get_if<DictPtr>(&value)) return p->get();
  if (auto s = std::get_if<StreamPtr>(&value)) return &(*s)->dict;
  return nullptr;
}

bool is_whitespace(char c);
bool is_delimiter(char c);

// Tokenizer over an in-memory buffer. `base_offset` is added to positions in
// error messages (used when parsing inside a decoded stream).
class Lexer {
 public:
  explicit Lexer(std::string_view data, std::int64_t base_offset = 0)
      : data_(data), base_(base_offset) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos < data_.size() ? pos : data_.size(); }
  bool at_end() {
    skip_whitespace();
    return pos_ >= data_.size();
  }
  std::string_view data() const { return data_; }

  void skip_whitespace();

  // Reads one object. Arrays and dictionaries are read recursively. With
  // `resolve_refs`, "n g R" sequences become Ref objects. Keywords other than
  // true/false/null are returned as Keyword.
  Object read_object(bool resolve_refs = true);

  // Reads a token if it is the given keyword; otherwise leaves the position unchanged.
  bool accept_keyword(std::string_view keyword);

  [[noreturn]] void fail(const std::string& message) const;
  std::int64_t offset() const { return base_ + static_cast<std::int64_t>(pos_); }

 private:
  Object read_object_at_depth(bool resolve_refs, int depth);
  Object read_number_or_ref(bool resolve_refs);
  String read_literal_string();
  String read_hex_string();
  Name read_name();
  std::string read_regular_token();

  std::string_view data_;
  std::int64_t base_;
  std::size_t pos_ = 0;
};

inline constexpr int kMaxNesting = 64;

}  // namespace dqa::pdf
