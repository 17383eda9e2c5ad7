#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dqa/pdf_extract.hpp"
#include "objects.hpp"

namespace dqa::pdf {

struct XrefEntry {
  enum class Kind { Free, InFile, Compressed };
  Kind kind = Kind::Free;
  std::uint64_t offset = 0;       // InFile: byte offset; Compressed: object stream number
  std::uint32_t index = 0;        // Compressed: index inside the object stream
  std::uint32_t gen = 0;
};

struct Page {
  Object dict;        // the /Page dictionary
  Object resources;   // own or inherited /Resources (may be null)
};

// Parsed file structure with lazy, cached object loading.
class Document {
 public:
  Document(std::string_view data, const PdfExtractOptions& options);

  // Follows references (up to a fixed chain length); non-refs are returned as is.
  Object resolve(const Object& obj);
  Object load(const Ref& ref);

  const DictData& trailer() const { return *trailer_; }
  std::vector<Page> pages();

  std::string decode_stream(const StreamData& stream);
  // Decoded /Contents of a page, streams joined by '\n'.
  std::string page_contents(const Page& page);

  const PdfExtractOptions& options() const { return options_; }

 private:
  void read_xref_chain(std::size_t offset);
  std::size_t read_xref_table(std::size_t offset);  // returns /Prev or npos
  std::size_t read_xref_stream(std::size_t offset);
  DictPtr absorb_trailer(const DictData& trailer, std::size_t* prev, std::size_t* xref_stm);
  Object parse_indirect_at(std::size_t offset, const Ref* expected);
  Object load_compressed(std::uint32_t stream_num, std::uint32_t index, std::uint32_t num);
  void collect_pages(const Object& node, const Object& inherited_resources, std::set<std::uint32_t>& seen,
                     std::vector<Page>& out, int depth, std::uint32_t node_num);

  std::string_view data_;
  PdfExtractOptions options_;
  std::unordered_map<std::uint32_t, XrefEntry> xref_;
  DictPtr trailer_;
  std::unordered_map<std::uint32_t, Object> cache_;
  std::set<std::uint32_t> loading_;
  std::map<std::uint32_t, std::string> objstm_cache_;
};

}  // namespace dqa::pdf
