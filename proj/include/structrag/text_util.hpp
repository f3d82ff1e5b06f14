#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the parsers and pipeline stages. All
// functions are byte-oriented and treat non-ASCII bytes as opaque.
namespace structrag::text {

bool is_space(char c) noexcept;

std::string_view trim(std::string_view s) noexcept;
std::string_view trim_right(std::string_view s) noexcept;
std::string_view trim_left(std::string_view s) noexcept;

std::string to_lower(std::string_view s);

// Splits on '\n'; a trailing "\r" on each line is dropped. The empty string
// yields a single empty line.
std::vector<std::string_view> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_icase(std::string_view s, std::string_view prefix) noexcept;

// Position of the last case-insensitive occurrence of `needle`, or npos.
std::size_t rfind_icase(std::string_view haystack, std::string_view needle) noexcept;

// Collapses every run of whitespace into one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

// Largest position <= pos that does not fall inside a UTF-8 multi-byte
// sequence.
std::size_t utf8_floor(std::string_view s, std::size_t pos) noexcept;

// Removes a surrounding ``` fenced block if the whole text is wrapped in one.
std::string strip_code_fence(std::string_view s);

}  // namespace structrag::text
