#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dqa {

// TSV fields never contain tabs or line breaks; they are replaced by a space.
std::string tsv_field(std::string_view value);

// Splits one line (without its '\n') on tabs.
std::vector<std::string> split_tsv_line(std::string_view line);

}  // namespace dqa
