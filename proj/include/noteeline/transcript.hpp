#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "noteeline/model.hpp"

namespace noteeline::transcript {

enum class CaptionFormat { vtt, srt, json };

// Parsers produce a Transcript with empty video_ref and language "en";
// callers fill in provenance. All throw FormatError.
Transcript parse_vtt(std::string_view bytes);
Transcript parse_srt(std::string_view bytes);
Transcript parse_segments_json(std::string_view bytes);
Transcript parse(std::string_view bytes, CaptionFormat format);

CaptionFormat format_from_name(std::string_view name);  // "vtt" | "srt" | "json"

// Canonical serializer: the JSON segment array format, one object per segment.
std::string to_segments_json(const Transcript& t);

// Removes <...> markup and decodes the common HTML entities used in captions.
std::string strip_caption_markup(std::string_view payload);

struct TranscriptWindow {
    std::string text;
    std::size_t first_index = 0;
    std::size_t last_index = 0;
    std::vector<std::size_t> indices;  // segments included, ascending
    double window_start = 0.0;
    double window_end = 0.0;
};

struct WindowConfig {
    double before = 45.0;
    double after = 15.0;
};

// Segments whose half-open [start, start+duration) meets the closed
// interval [video_time-before, video_time+after]. Falls back to the single
// nearest segment when nothing intersects. Throws EmptyTranscript.
TranscriptWindow window_around(const Transcript& t, double video_time, double before, double after);
inline TranscriptWindow window_around(const Transcript& t, double video_time, const WindowConfig& cfg) {
    return window_around(t, video_time, cfg.before, cfg.after);
}

std::string full_text(const Transcript& t);

}  // namespace noteeline::transcript
