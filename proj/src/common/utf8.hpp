#pragma once

// Internal UTF-8 helpers shared by the text-processing modules.

#include <cstdint>
#include <string>
#include <string_view>

namespace dqa::utf8 {

// Decodes the code point starting at `pos` and advances `pos`. Invalid
// sequences yield U+FFFD and advance by one byte.
char32_t next(std::string_view s, std::size_t& pos);

// Code point ending just before `pos` (pos > 0), without moving.
char32_t prev(std::string_view s, std::size_t pos, std::size_t* start = nullptr);

void append(std::string& out, char32_t cp);

bool valid(std::string_view s);

std::string nfc(std::string_view s);
std::string lower(std::string_view s);

bool is_alpha(char32_t cp);
bool is_alnum(char32_t cp);
bool is_digit(char32_t cp);
bool is_upper(char32_t cp);
bool is_lower(char32_t cp);

}  // namespace dqa::utf8
