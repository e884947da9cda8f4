#include "noteeline/text.hpp"

#include <algorithm>
#include <cctype>

namespace noteeline::text {

static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string trim_copy(std::string_view s) { return std::string(trim(s)); }

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto nl = s.find('\n', pos);
        if (nl == std::string_view::npos) {
            if (pos < s.size()) lines.emplace_back(s.substr(pos));
            break;
        }
        auto line = s.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        pos = nl + 1;
    }
    if (!lines.empty() && !lines.back().empty() && lines.back().back() == '\r') lines.back().pop_back();
    return lines;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
    if (prefix.size() > s.size()) return false;
    return ascii_lower(s.substr(0, prefix.size())) == ascii_lower(prefix);
}

bool contains_icase(std::string_view s, std::string_view needle) {
    return ascii_lower(s).find(ascii_lower(needle)) != std::string::npos;
}

}  // namespace noteeline::text
