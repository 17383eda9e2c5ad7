#pragma once

#include <map>
#include <string>
#include <string_view>

#include "document.hpp"
#include "fonts.hpp"

namespace dqa::pdf {

// Accumulates shown text. Line breaks and TJ word gaps are recorded as
// pending and only materialize between two pieces of text, so a page never
// starts or ends with a break.
class TextSink {
 public:
  void text(std::string_view utf8);
  void line_break() { pending_break_ = true; }
  void word_gap() { pending_space_ = true; }
  std::string take() { return std::move(out_); }
  const std::string& str() const { return out_; }

 private:
  std::string out_;
  bool pending_break_ = false;
  bool pending_space_ = false;
};

class ContentInterpreter {
 public:
  ContentInterpreter(Document& doc, TextSink& sink) : doc_(doc), sink_(sink) {}

  // Interprets one content stream. Damage inside the stream ends
  // interpretation of that stream; text shown before it is kept.
  void run(std::string_view content, const Object& resources, int depth = 0);

 private:
  const FontDecoder& font(const Object& resources, const std::string& name);
  void show(std::string_view bytes);
  void run_form(const Object& resources, const std::string& name, int depth);

  Document& doc_;
  TextSink& sink_;
  std::map<const void*, FontDecoder> fonts_;
  const FontDecoder* current_ = nullptr;
  FontDecoder fallback_ = FontDecoder::standard();
};

}  // namespace dqa::pdf
