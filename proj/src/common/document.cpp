#include "dqa/document.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace dqa {

std::string_view sector_name(Sector sector) {
  switch (sector) {
    case Sector::AgricultureFoodForests: return "Agriculture/Food/Forests";
    case Sector::Energy: return "Energy";
    case Sector::Banks: return "Banks";
    case Sector::Transportation: return "Transportation";
    case Sector::Insurance: return "Insurance";
    case Sector::MaterialsBuildings: return "Materials/Buildings";
    case Sector::Other: return "Other";
  }
  return "Other";
}

namespace {

// Lowercase and keep only letters, so "Agriculture, Food & Forests" and
// "Agriculture/Food/Forests" compare equal.
std::string sector_key(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return key;
}

}  // namespace

std::optional<Sector> parse_sector(std::string_view text) {
  const std::string key = sector_key(text);
  for (Sector s : kAllSectors) {
    if (sector_key(sector_name(s)) == key) return s;
  }
  return std::nullopt;
}

}  // namespace dqa
