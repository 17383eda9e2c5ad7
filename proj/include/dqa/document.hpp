#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dqa {

// Reporting sectors. Labels follow the per-sector results table; anything
// else is Other.
enum class Sector {
  AgricultureFoodForests,
  Energy,
  Banks,
  Transportation,
  Insurance,
  MaterialsBuildings,
  Other,
};

inline constexpr Sector kAllSectors[] = {
    Sector::AgricultureFoodForests, Sector::Energy,    Sector::Banks,
    Sector::Transportation,         Sector::Insurance, Sector::MaterialsBuildings,
    Sector::Other,
};

std::string_view sector_name(Sector sector);
// Accepts the canonical names ("Agriculture/Food/Forests") and the table
// labels ("Agriculture, Food & Forests"), case-insensitively.
std::optional<Sector> parse_sector(std::string_view text);

struct DocMeta {
  std::string company;
  Sector sector = Sector::Other;
  std::optional<int> year;
};

// Extracted text of one report. Offsets (page_breaks, sentence spans) are byte
// offsets into the UTF-8 `text`, always on code point boundaries.
struct RawDocument {
  std::string doc_id;
  std::string source_name;
  std::string text;
  std::vector<std::size_t> page_breaks;
  DocMeta meta;
};

}  // namespace dqa
