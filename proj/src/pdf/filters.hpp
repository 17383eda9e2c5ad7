#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "objects.hpp"

namespace dqa::pdf {

struct FilterStep {
  std::string name;
  const DictData* params = nullptr;  // /DecodeParms entry, already resolved
};

// Applies one decoding filter. Throws UnsupportedPdf for filters outside
// FlateDecode / ASCIIHexDecode / ASCII85Decode and MalformedPdf for corrupt data.
std::string apply_filter(std::string_view data, const FilterStep& step, std::size_t max_bytes,
                         std::int64_t offset);

std::string inflate(std::string_view data, std::size_t max_bytes, std::int64_t offset);

}  // namespace dqa::pdf
