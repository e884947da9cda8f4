#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace noteeline::text {

std::string_view trim(std::string_view s);
std::string trim_copy(std::string_view s);
bool is_blank(std::string_view s);

// Number of Unicode code points in a UTF-8 string. Invalid lead bytes count as one.
std::size_t utf8_length(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split_lines(std::string_view s);  // accepts LF and CRLF

bool starts_with_icase(std::string_view s, std::string_view prefix);
bool contains_icase(std::string_view s, std::string_view needle);
std::string ascii_lower(std::string_view s);

}  // namespace noteeline::text
