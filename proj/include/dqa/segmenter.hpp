#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dqa/document.hpp"

namespace dqa {

struct Sentence {
  std::size_t sent_id = 0;
  std::string doc_id;
  std::string text;
  std::size_t start = 0;  // byte span into RawDocument::text
  std::size_t end = 0;

  bool operator==(const Sentence&) const = default;
};

std::vector<std::string> default_abbreviations();

struct SegmenterConfig {
  std::size_t min_len = 20;   // characters (code points), inclusive
  std::size_t max_len = 1000;
  std::vector<std::string> abbreviations = default_abbreviations();
};

struct SegmentResult {
  std::vector<Sentence> sentences;
  std::size_t dropped_short = 0;
  std::size_t dropped_long = 0;
};

// NFC; CRLF/CR to LF; runs of spaces and tabs to one space; spaces around
// line breaks removed; "cli-\nmate" joined to "climate"; 3+ newlines to 2.
// Idempotent.
std::string normalize_text(std::string_view text);

// Normalizes page by page so page_breaks stay valid; pages that normalize to
// nothing are dropped.
RawDocument normalize_document(RawDocument doc);

// Rule-based segmentation of already-normalized text.
SegmentResult split_sentences(const RawDocument& doc, const SegmenterConfig& config = {});

// Header `doc_id<TAB>sent_id<TAB>start<TAB>end<TAB>text`; returns data rows
// written. Throws IoError when the stream fails.
std::size_t write_sentences_tsv(std::span<const Sentence> sentences, std::ostream& out);
// Throws FormatError.
std::vector<Sentence> read_sentences_tsv(std::istream& in);

std::size_t count_code_points(std::string_view text);

}  // namespace dqa
