#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "dqa/document.hpp"

namespace dqa {

struct PdfExtractOptions {
  // TJ displacements (thousandths of an em) whose magnitude exceeds this value
  // are rendered as a word space.
  double kerning_space_threshold = 180.0;
  // Upper bound on the decoded size of any single stream.
  std::size_t max_stream_bytes = std::size_t{256} << 20;
};

// Text of an unencrypted PDF, pages in page-tree order. Non-empty pages are
// joined by a blank line and get a page_breaks entry at their first byte.
// Throws MalformedPdf / UnsupportedPdf.
RawDocument extract_pdf_text(std::string_view bytes, const PdfExtractOptions& options = {});

// UTF-8 (or the hinted encoding) with line endings normalized to '\n'.
// Throws DecodeError.
RawDocument extract_plain_text(std::string_view bytes,
                               const std::optional<std::string>& encoding_hint = std::nullopt);

// Dispatches on the `%PDF-` marker.
RawDocument extract_document(std::string_view bytes, const PdfExtractOptions& options = {});

bool looks_like_pdf(std::string_view bytes);

}  // namespace dqa
