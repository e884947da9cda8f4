#include "noteeline/transcript.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include <json.hpp>

#include "noteeline/errors.hpp"
#include "noteeline/model_json.hpp"
#include "noteeline/text.hpp"

namespace noteeline::transcript {

namespace {

std::string_view strip_bom(std::string_view s) {
    if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
        static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF) {
        s.remove_prefix(3);
    }
    return s;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// [hh:]mm:ss(.|,)fff -> milliseconds
std::optional<std::int64_t> parse_timestamp(std::string_view s, bool allow_comma) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
        auto colon = s.find(':', pos);
        if (colon == std::string_view::npos) {
            parts.push_back(s.substr(pos));
            break;
        }
        parts.push_back(s.substr(pos, colon - pos));
        pos = colon + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) return std::nullopt;

    std::string_view sec_part = parts.back();
    auto sep = sec_part.find('.');
    if (sep == std::string_view::npos && allow_comma) sep = sec_part.find(',');
    if (sep == std::string_view::npos) return std::nullopt;
    auto whole = sec_part.substr(0, sep);
    auto frac = sec_part.substr(sep + 1);
    if (whole.size() != 2 || !all_digits(whole) || frac.size() != 3 || !all_digits(frac)) return std::nullopt;

    std::int64_t hours = 0;
    std::size_t mi = 0;
    if (parts.size() == 3) {
        if (!all_digits(parts[0])) return std::nullopt;
        hours = std::stoll(std::string(parts[0]));
        mi = 1;
    }
    if (parts[mi].size() != 2 || !all_digits(parts[mi])) return std::nullopt;
    std::int64_t minutes = std::stoll(std::string(parts[mi]));
    std::int64_t seconds = std::stoll(std::string(whole));
    std::int64_t millis = std::stoll(std::string(frac));
    if (minutes > 59 || seconds > 59) return std::nullopt;
    return ((hours * 60 + minutes) * 60 + seconds) * 1000 + millis;
}

struct Timing {
    std::int64_t start_ms;
    std::int64_t end_ms;
};

Timing parse_timing_line(std::string_view line, std::size_t line_no, bool allow_comma) {
    auto arrow = line.find("-->");
    if (arrow == std::string_view::npos) throw FormatError(line_no, "expected cue timing line");
    auto left = text::trim(line.substr(0, arrow));
    auto right = text::trim(line.substr(arrow + 3));
    // Cue settings may follow the end timestamp.
    auto space = right.find_first_of(" \t");
    if (space != std::string_view::npos) right = right.substr(0, space);
    auto start = parse_timestamp(left, allow_comma);
    if (!start) throw FormatError(line_no, "malformed timestamp '" + std::string(left) + "'");
    auto end = parse_timestamp(right, allow_comma);
    if (!end) throw FormatError(line_no, "malformed timestamp '" + std::string(right) + "'");
    if (*end <= *start) throw FormatError(line_no, "cue end is not after start");
    return {*start, *end};
}

TranscriptSegment make_segment(const Timing& t, const std::vector<std::string>& payload) {
    std::vector<std::string> cleaned;
    for (const auto& p : payload) {
        auto s = text::trim_copy(strip_caption_markup(p));
        if (!s.empty()) cleaned.push_back(std::move(s));
    }
    return TranscriptSegment{text::join(cleaned, "\n"), static_cast<double>(t.start_ms) / 1000.0,
                             static_cast<double>(t.end_ms - t.start_ms) / 1000.0};
}

void sort_segments(Transcript& t) {
    std::stable_sort(t.segments.begin(), t.segments.end(),
                     [](const TranscriptSegment& a, const TranscriptSegment& b) { return a.start < b.start; });
}

void append_if_nonempty(Transcript& t, TranscriptSegment seg) {
    if (!text::is_blank(seg.text)) t.segments.push_back(std::move(seg));
}

}  // namespace

std::string strip_caption_markup(std::string_view payload) {
    std::string out;
    out.reserve(payload.size());
    bool in_tag = false;
    for (char c : payload) {
        if (in_tag) {
            if (c == '>') in_tag = false;
            continue;
        }
        if (c == '<') {
            in_tag = true;
            continue;
        }
        out.push_back(c);
    }
    static const std::pair<std::string_view, std::string_view> entities[] = {
        {"&lt;", "<"}, {"&gt;", ">"}, {"&nbsp;", " "}, {"&lrm;", ""}, {"&rlm;", ""}, {"&quot;", "\""},
        {"&#39;", "'"}, {"&amp;", "&"},
    };
    for (const auto& [from, to] : entities) {
        std::size_t pos = 0;
        while ((pos = out.find(from, pos)) != std::string::npos) {
            out.replace(pos, from.size(), to);
            pos += to.size();
        }
    }
    return out;
}

Transcript parse_vtt(std::string_view bytes) {
    auto lines = text::split_lines(strip_bom(bytes));
    if (lines.empty()) throw FormatError(1, "missing WEBVTT header");
    const auto& header = lines[0];
    if (header.rfind("WEBVTT", 0) != 0 ||
        (header.size() > 6 && header[6] != ' ' && header[6] != '\t')) {
        throw FormatError(1, "missing WEBVTT header");
    }

    Transcript t;
    std::size_t i = 1;
    // Header block runs until the first blank line.
    while (i < lines.size() && !text::is_blank(lines[i])) ++i;

    while (i < lines.size()) {
        while (i < lines.size() && text::is_blank(lines[i])) ++i;
        if (i >= lines.size()) break;

        std::size_t block_start = i;
        std::vector<std::string> block;
        while (i < lines.size() && !text::is_blank(lines[i])) block.push_back(lines[i++]);

        const auto& first = block.front();
        if (first.rfind("NOTE", 0) == 0 || first.rfind("STYLE", 0) == 0 || first.rfind("REGION", 0) == 0) {
            if (first.find("-->") == std::string::npos) continue;
        }
        std::size_t timing_idx = 0;
        if (first.find("-->") == std::string::npos) {
            timing_idx = 1;  // cue identifier line
            if (block.size() < 2) throw FormatError(block_start + 1, "cue identifier without timing line");
        }
        auto timing = parse_timing_line(block[timing_idx], block_start + timing_idx + 1, false);
        std::vector<std::string> payload(block.begin() + static_cast<std::ptrdiff_t>(timing_idx) + 1, block.end());
        append_if_nonempty(t, make_segment(timing, payload));
    }
    if (t.segments.empty()) throw FormatError(0, "no cues");
    sort_segments(t);
    return t;
}

Transcript parse_srt(std::string_view bytes) {
    auto lines = text::split_lines(strip_bom(bytes));
    Transcript t;
    std::size_t i = 0;
    while (i < lines.size()) {
        while (i < lines.size() && text::is_blank(lines[i])) ++i;
        if (i >= lines.size()) break;

        std::size_t block_start = i;
        std::vector<std::string> block;
        while (i < lines.size() && !text::is_blank(lines[i])) block.push_back(lines[i++]);

        std::size_t timing_idx = 0;
        if (block.front().find("-->") == std::string::npos) {
            if (!all_digits(text::trim(block.front()))) {
                throw FormatError(block_start + 1, "expected cue index");
            }
            timing_idx = 1;
            if (block.size() < 2) throw FormatError(block_start + 1, "cue index without timing line");
        }
        auto timing = parse_timing_line(block[timing_idx], block_start + timing_idx + 1, true);
        std::vector<std::string> payload(block.begin() + static_cast<std::ptrdiff_t>(timing_idx) + 1, block.end());
        append_if_nonempty(t, make_segment(timing, payload));
    }
    if (t.segments.empty()) throw FormatError(0, "no cues");
    sort_segments(t);
    return t;
}

Transcript parse_segments_json(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(strip_bom(bytes));
    } catch (const json::parse_error& e) {
        throw FormatError(0, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw FormatError(0, "expected a JSON array of segments");

    Transcript t;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        auto where = "segment " + std::to_string(i) + ": ";
        if (!item.is_object()) throw FormatError(0, where + "expected an object");
        for (const char* key : {"text", "start", "duration"}) {
            if (!item.contains(key)) throw FormatError(0, where + "missing field '" + key + "'");
        }
        if (!item["text"].is_string()) throw FormatError(0, where + "'text' must be a string");
        if (!item["start"].is_number() || !item["duration"].is_number()) {
            throw FormatError(0, where + "'start' and 'duration' must be numbers");
        }
        TranscriptSegment seg{item["text"].get<std::string>(), item["start"].get<double>(),
                              item["duration"].get<double>()};
        if (!(seg.start >= 0)) throw FormatError(0, where + "negative start");
        if (!(seg.duration > 0)) throw FormatError(0, where + "non-positive duration");
        if (text::is_blank(seg.text)) throw FormatError(0, where + "empty text");
        t.segments.push_back(std::move(seg));
    }
    sort_segments(t);
    return t;
}

Transcript parse(std::string_view bytes, CaptionFormat format) {
    switch (format) {
        case CaptionFormat::vtt: return parse_vtt(bytes);
        case CaptionFormat::srt: return parse_srt(bytes);
        case CaptionFormat::json: return parse_segments_json(bytes);
    }
    return parse_vtt(bytes);
}

CaptionFormat format_from_name(std::string_view name) {
    auto lower = text::ascii_lower(name);
    if (lower == "vtt" || lower == "webvtt") return CaptionFormat::vtt;
    if (lower == "srt") return CaptionFormat::srt;
    if (lower == "json") return CaptionFormat::json;
    throw Error(ErrorCode::InvalidRequest, "unknown caption format: " + std::string(name));
}

std::string to_segments_json(const Transcript& t) {
    json arr = json::array();
    for (const auto& s : t.segments) arr.push_back(s);
    return arr.dump() + "\n";
}

TranscriptWindow window_around(const Transcript& t, double video_time, double before, double after) {
    if (t.segments.empty()) throw Error(ErrorCode::EmptyTranscript, "transcript has no segments");
    if (!(before >= 0) || !(after >= 0)) {
        throw Error(ErrorCode::ValidationFailed, "window before/after must be non-negative");
    }
    TranscriptWindow w;
    w.window_start = video_time - before;
    w.window_end = video_time + after;

    for (std::size_t i = 0; i < t.segments.size(); ++i) {
        const auto& s = t.segments[i];
        if (s.start <= w.window_end && s.end() > w.window_start) w.indices.push_back(i);
    }

    if (w.indices.empty()) {
        std::size_t best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < t.segments.size(); ++i) {
            const auto& s = t.segments[i];
            double dist = 0.0;
            if (video_time < s.start) {
                dist = s.start - video_time;
            } else if (video_time >= s.end()) {
                dist = video_time - s.end();
            }
            if (dist < best_dist) {
                best_dist = dist;
                best = i;
            }
        }
        w.indices.push_back(best);
    }

    std::vector<std::string> parts;
    for (auto i : w.indices) parts.push_back(t.segments[i].text);
    w.text = text::join(parts, " ");
    w.first_index = w.indices.front();
    w.last_index = w.indices.back();
    return w;
}

std::string full_text(const Transcript& t) {
    std::vector<std::string> parts;
    parts.reserve(t.segments.size());
    for (const auto& s : t.segments) parts.push_back(s.text);
    return text::join(parts, " ");
}

}  // namespace noteeline::transcript
