#include "noteeline/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>

#include "noteeline/errors.hpp"
#include "noteeline/text.hpp"

namespace noteeline {

WallTime WallTime::now() {
    using namespace std::chrono;
    return WallTime{duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count()};
}

std::string WallTime::to_iso8601() const {
    std::int64_t secs = epoch_ms / 1000;
    std::int64_t ms = epoch_ms % 1000;
    if (ms < 0) {
        ms += 1000;
        secs -= 1;
    }
    std::time_t t = static_cast<std::time_t>(secs);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

WallTime WallTime::from_iso8601(std::string_view s) {
    // Accepts YYYY-MM-DDTHH:MM:SS[.fff]Z
    std::string str(s);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    int consumed = 0;
    if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6 ||
        consumed != 19) {
        throw Error(ErrorCode::ValidationFailed, "malformed UTC timestamp: " + str);
    }
    std::string_view rest = std::string_view(str).substr(19);
    int ms = 0;
    if (!rest.empty() && rest.front() == '.') {
        rest.remove_prefix(1);
        int digits = 0;
        while (!rest.empty() && rest.front() >= '0' && rest.front() <= '9') {
            if (digits < 3) ms = ms * 10 + (rest.front() - '0');
            ++digits;
            rest.remove_prefix(1);
        }
        if (digits == 0) throw Error(ErrorCode::ValidationFailed, "malformed UTC timestamp: " + str);
        for (int i = digits; i < 3; ++i) ms *= 10;
    }
    if (rest != "Z") throw Error(ErrorCode::ValidationFailed, "timestamp must be UTC (Z): " + str);
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) {
        throw Error(ErrorCode::ValidationFailed, "timestamp out of range: " + str);
    }
    std::tm tm{};
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = sec;
    std::int64_t secs = timegm(&tm);
    return WallTime{secs * 1000 + ms};
}

std::string_view to_string(ExpansionStatus s) {
    switch (s) {
        case ExpansionStatus::ok: return "ok";
        case ExpansionStatus::refused: return "refused";
        case ExpansionStatus::failed: return "failed";
    }
    return "failed";
}

std::optional<ExpansionStatus> expansion_status_from(std::string_view s) {
    if (s == "ok") return ExpansionStatus::ok;
    if (s == "refused") return ExpansionStatus::refused;
    if (s == "failed") return ExpansionStatus::failed;
    return std::nullopt;
}

std::string_view to_string(PlaybackKind k) {
    switch (k) {
        case PlaybackKind::play: return "play";
        case PlaybackKind::pause: return "pause";
        case PlaybackKind::seek: return "seek";
        case PlaybackKind::rate_change: return "rate_change";
    }
    return "play";
}

std::optional<PlaybackKind> playback_kind_from(std::string_view s) {
    if (s == "play") return PlaybackKind::play;
    if (s == "pause") return PlaybackKind::pause;
    if (s == "seek") return PlaybackKind::seek;
    if (s == "rate_change") return PlaybackKind::rate_change;
    return std::nullopt;
}

std::string_view to_string(OrderingMode m) {
    return m == OrderingMode::by_theme ? "by_theme" : "by_time";
}

std::optional<OrderingMode> ordering_mode_from(std::string_view s) {
    if (s == "by_time") return OrderingMode::by_time;
    if (s == "by_theme") return OrderingMode::by_theme;
    return std::nullopt;
}

const Micronote* Notebook::find_micronote(std::string_view note_id) const {
    auto it = std::find_if(micronotes.begin(), micronotes.end(),
                           [&](const Micronote& m) { return m.id == note_id; });
    return it == micronotes.end() ? nullptr : &*it;
}

Micronote* Notebook::find_micronote(std::string_view note_id) {
    return const_cast<Micronote*>(std::as_const(*this).find_micronote(note_id));
}

const ExpandedNote* Notebook::ok_expansion(std::string_view note_id) const {
    auto it = expansions.find(std::string(note_id));
    if (it == expansions.end() || !it->second.is_ok()) return nullptr;
    return &it->second;
}

std::size_t Notebook::ok_expansion_count() const {
    std::size_t n = 0;
    for (const auto& m : micronotes) {
        if (ok_expansion(m.id)) ++n;
    }
    return n;
}

std::string Notebook::next_micronote_id() const {
    for (std::size_t n = micronotes.size() + 1;; ++n) {
        std::string id = "m" + std::to_string(n);
        if (!find_micronote(id)) return id;
    }
}

bool is_safe_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-';
    });
}

std::vector<Violation> validate_micronote(const Micronote& note) {
    std::vector<Violation> out;
    if (note.id.empty()) out.push_back({"micronotes.id", "non-empty"});
    if (text::is_blank(note.text)) out.push_back({"micronotes." + note.id + ".text", "non-empty"});
    if (text::utf8_length(note.text) > kMaxMicronoteChars) {
        out.push_back({"micronotes." + note.id + ".text", "at most 500 characters"});
    }
    if (!std::isfinite(note.video_time) || note.video_time < 0) {
        out.push_back({"micronotes." + note.id + ".video_time", "non-negative"});
    }
    if (note.finished_wall < note.created_wall) {
        out.push_back({"micronotes." + note.id + ".finished_wall", "not before created_wall"});
    }
    return out;
}

std::vector<Violation> validate_cue_question(const CueQuestion& q, std::string_view field) {
    std::vector<Violation> out;
    std::string f(field);
    if (text::is_blank(q.question)) out.push_back({f + ".question", "non-empty"});
    if (q.options.size() != kCueOptionCount) {
        out.push_back({f + ".options", "length 4"});
    } else {
        std::set<std::string> seen;
        for (const auto& o : q.options) {
            if (text::is_blank(o)) out.push_back({f + ".options", "non-empty"});
            if (!seen.insert(text::trim_copy(o)).second) {
                out.push_back({f + ".options", "pairwise distinct"});
                break;
            }
        }
    }
    if (q.answer_index < 0 || q.answer_index > 3) out.push_back({f + ".answer_index", "in [0,3]"});
    return out;
}

std::vector<Violation> validate_onboarding_example(const OnboardingExample& ex, std::string_view field) {
    std::vector<Violation> out;
    std::string f(field);
    if (text::is_blank(ex.transcript_excerpt)) out.push_back({f + ".transcript_excerpt", "non-empty"});
    if (text::is_blank(ex.keypoint)) out.push_back({f + ".keypoint", "non-empty"});
    if (text::is_blank(ex.full_note)) out.push_back({f + ".full_note", "non-empty"});
    return out;
}

std::vector<Violation> validate_profile(const UserProfile& profile) {
    std::vector<Violation> out;
    if (!is_safe_id(profile.user_id)) out.push_back({"user_id", "safe id"});
    if (!profile.examples.empty() && profile.examples.size() != kOnboardingExampleCount) {
        out.push_back({"examples", "length 0 or 3"});
    }
    for (std::size_t i = 0; i < profile.examples.size(); ++i) {
        auto v = validate_onboarding_example(profile.examples[i], "examples." + std::to_string(i));
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

namespace {

void check_expansion_map(const Notebook& nb, const std::map<std::string, ExpandedNote>& map,
                         const std::string& field, std::vector<Violation>& out) {
    for (const auto& [key, exp] : map) {
        if (key != exp.micronote_id) {
            out.push_back({field, "key matches micronote_id (" + key + ")"});
        }
        if (!nb.find_micronote(key)) {
            out.push_back({field, "references known micronote (" + key + ")"});
        }
        if (exp.is_ok() && text::is_blank(exp.text)) {
            out.push_back({field + "." + key + ".text", "non-empty when status ok"});
        }
    }
}

}  // namespace

std::vector<Violation> validate_notebook(const Notebook& nb) {
    std::vector<Violation> out;
    if (!is_safe_id(nb.id)) out.push_back({"id", "safe id"});
    if (!nb.user_id.empty() && !is_safe_id(nb.user_id)) out.push_back({"user_id", "safe id"});

    const auto& segs = nb.transcript.segments;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        std::string f = "transcript.segments." + std::to_string(i);
        if (!(segs[i].start >= 0)) out.push_back({f + ".start", "non-negative"});
        if (!(segs[i].duration > 0)) out.push_back({f + ".duration", "positive"});
        if (text::is_blank(segs[i].text)) out.push_back({f + ".text", "non-empty"});
        if (i > 0 && segs[i].start < segs[i - 1].start) {
            out.push_back({"transcript.segments", "sorted by start"});
        }
    }

    std::set<std::string> ids;
    for (const auto& m : nb.micronotes) {
        if (!ids.insert(m.id).second) out.push_back({"micronotes", "unique ids (" + m.id + ")"});
        auto v = validate_micronote(m);
        out.insert(out.end(), v.begin(), v.end());
    }

    check_expansion_map(nb, nb.expansions, "expansions", out);
    check_expansion_map(nb, nb.ablation_expansions, "ablation_expansions", out);

    if (nb.themes) {
        std::set<std::string> themed;
        std::set<std::string> names;
        for (const auto& t : *nb.themes) {
            if (text::is_blank(t.theme_name)) out.push_back({"themes.theme_name", "non-empty"});
            if (!names.insert(t.theme_name).second) {
                out.push_back({"themes", "unique theme names (" + t.theme_name + ")"});
            }
            if (t.note_ids.empty()) out.push_back({"themes." + t.theme_name + ".note_ids", "non-empty"});
            for (const auto& id : t.note_ids) {
                if (!nb.find_micronote(id)) out.push_back({"themes", "references known micronote (" + id + ")"});
                if (!themed.insert(id).second) out.push_back({"themes", "no note in two themes (" + id + ")"});
            }
        }
    }

    if (nb.cue_questions) {
        if (nb.cue_questions->size() != kCueQuestionCount) out.push_back({"cue_questions", "length 5"});
        for (std::size_t i = 0; i < nb.cue_questions->size(); ++i) {
            auto v = validate_cue_question((*nb.cue_questions)[i], "cue_questions." + std::to_string(i));
            out.insert(out.end(), v.begin(), v.end());
        }
    }
    if (nb.cue_generation < 0) out.push_back({"cue_generation", "non-negative"});

    for (std::size_t i = 0; i < nb.events.size(); ++i) {
        const auto& e = nb.events[i];
        bool is_seek = e.kind == PlaybackKind::seek;
        if (is_seek != e.target_time.has_value()) {
            out.push_back({"events." + std::to_string(i) + ".target_time", "present iff kind is seek"});
        }
    }

    if (nb.ordering_mode == OrderingMode::by_theme && !nb.themes) {
        out.push_back({"ordering_mode", "by_theme requires themes"});
    }
    return out;
}

std::vector<std::string> describe(const std::vector<Violation>& violations) {
    std::vector<std::string> out;
    out.reserve(violations.size());
    for (const auto& v : violations) out.push_back(v.describe());
    return out;
}

}  // namespace noteeline
