#pragma once

#include <string>
#include <vector>

namespace dqa {

// Small PDF generator used for fixtures, demos and round-trip tests. Text is
// written with a WinAnsiEncoding Helvetica font, so every character must be
// representable in Windows-1252.
struct PdfWriterOptions {
  bool compress = false;         // FlateDecode content streams
  bool xref_stream = false;      // cross-reference stream instead of a table
  bool object_streams = false;   // pack dictionaries into an object stream (needs xref_stream)
  bool kerned_words = false;     // write words as [(a) -250 (b)] TJ instead of spaces
};

struct PdfFixture {
  std::string bytes;
  // What extraction must return: lines joined by '\n', non-empty pages joined
  // by "\n\n".
  std::string expected_text;
};

// `pages[i]` is the list of lines on page i. Throws std::invalid_argument for
// text that WinAnsiEncoding cannot represent.
PdfFixture write_pdf(const std::vector<std::vector<std::string>>& pages,
                     const PdfWriterOptions& options = {});

}  // namespace dqa
