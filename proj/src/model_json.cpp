#include "noteeline/model_json.hpp"

#include "noteeline/errors.hpp"

namespace noteeline {

namespace {

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& out) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        out.reset();
    } else {
        out = it->template get<T>();
    }
}

[[noreturn]] void bad_enum(const char* field, const std::string& value) {
    throw Error(ErrorCode::ValidationFailed, std::string("unknown ") + field + " value: " + value);
}

}  // namespace

void to_json(json& j, const WallTime& t) { j = t.to_iso8601(); }
void from_json(const json& j, WallTime& t) { t = WallTime::from_iso8601(j.get<std::string>()); }

void to_json(json& j, const TranscriptSegment& s) {
    j = json{{"text", s.text}, {"start", s.start}, {"duration", s.duration}};
}
void from_json(const json& j, TranscriptSegment& s) {
    j.at("text").get_to(s.text);
    j.at("start").get_to(s.start);
    j.at("duration").get_to(s.duration);
}

void to_json(json& j, const Transcript& t) {
    j = json{{"video_ref", t.video_ref}, {"language", t.language}, {"segments", t.segments}};
}
void from_json(const json& j, Transcript& t) {
    j.at("video_ref").get_to(t.video_ref);
    j.at("language").get_to(t.language);
    j.at("segments").get_to(t.segments);
}

void to_json(json& j, const Micronote& m) {
    j = json{{"id", m.id},
             {"text", m.text},
             {"video_time", m.video_time},
             {"created_wall", m.created_wall},
             {"finished_wall", m.finished_wall}};
}
void from_json(const json& j, Micronote& m) {
    j.at("id").get_to(m.id);
    j.at("text").get_to(m.text);
    j.at("video_time").get_to(m.video_time);
    j.at("created_wall").get_to(m.created_wall);
    j.at("finished_wall").get_to(m.finished_wall);
}

void to_json(json& j, const ExpandedNote& e) {
    j = json{{"micronote_id", e.micronote_id},
             {"text", e.text},
             {"model_id", e.model_id},
             {"prompt_fingerprint", e.prompt_fingerprint},
             {"created_wall", e.created_wall},
             {"status", std::string(to_string(e.status))}};
    if (e.error) j["error"] = json{{"code", e.error->code}, {"detail", e.error->detail}};
}
void from_json(const json& j, ExpandedNote& e) {
    j.at("micronote_id").get_to(e.micronote_id);
    j.at("text").get_to(e.text);
    j.at("model_id").get_to(e.model_id);
    j.at("prompt_fingerprint").get_to(e.prompt_fingerprint);
    j.at("created_wall").get_to(e.created_wall);
    auto status = j.at("status").get<std::string>();
    auto parsed = expansion_status_from(status);
    if (!parsed) bad_enum("status", status);
    e.status = *parsed;
    if (auto it = j.find("error"); it != j.end() && !it->is_null()) {
        e.error = ExpansionFailure{it->at("code").get<std::string>(), it->at("detail").get<std::string>()};
    } else {
        e.error.reset();
    }
}

void to_json(json& j, const OnboardingExample& e) {
    j = json{{"clip_ref", e.clip_ref},
             {"transcript_excerpt", e.transcript_excerpt},
             {"keypoint", e.keypoint},
             {"full_note", e.full_note}};
}
void from_json(const json& j, OnboardingExample& e) {
    e.clip_ref = j.value("clip_ref", std::string{});
    j.at("transcript_excerpt").get_to(e.transcript_excerpt);
    j.at("keypoint").get_to(e.keypoint);
    j.at("full_note").get_to(e.full_note);
}

void to_json(json& j, const UserProfile& p) {
    j = json{{"user_id", p.user_id}, {"examples", p.examples}};
}
void from_json(const json& j, UserProfile& p) {
    j.at("user_id").get_to(p.user_id);
    j.at("examples").get_to(p.examples);
}

void to_json(json& j, const ThemeAssignment& t) {
    j = json{{"theme_name", t.theme_name}, {"note_ids", t.note_ids}};
}
void from_json(const json& j, ThemeAssignment& t) {
    j.at("theme_name").get_to(t.theme_name);
    j.at("note_ids").get_to(t.note_ids);
}

void to_json(json& j, const CueQuestion& q) {
    j = json{{"question", q.question}, {"options", q.options}, {"answer_index", q.answer_index}};
}
void from_json(const json& j, CueQuestion& q) {
    j.at("question").get_to(q.question);
    j.at("options").get_to(q.options);
    j.at("answer_index").get_to(q.answer_index);
}

void to_json(json& j, const PlaybackEvent& e) {
    j = json{{"kind", std::string(to_string(e.kind))}, {"video_time", e.video_time}, {"wall", e.wall}};
    if (e.target_time) j["target_time"] = *e.target_time;
}
void from_json(const json& j, PlaybackEvent& e) {
    auto kind = j.at("kind").get<std::string>();
    auto parsed = playback_kind_from(kind);
    if (!parsed) bad_enum("kind", kind);
    e.kind = *parsed;
    j.at("video_time").get_to(e.video_time);
    j.at("wall").get_to(e.wall);
    get_optional(j, "target_time", e.target_time);
}

void to_json(json& j, const Notebook& nb) {
    j = json{{"id", nb.id},
             {"title", nb.title},
             {"user_id", nb.user_id},
             {"transcript", nb.transcript},
             {"micronotes", nb.micronotes},
             {"expansions", nb.expansions},
             {"ablation_expansions", nb.ablation_expansions},
             {"cue_generation", nb.cue_generation},
             {"events", nb.events},
             {"ordering_mode", std::string(to_string(nb.ordering_mode))}};
    if (nb.themes) j["themes"] = *nb.themes;
    if (nb.cue_questions) j["cue_questions"] = *nb.cue_questions;
    if (nb.summary) j["summary"] = *nb.summary;
    if (nb.reference_notes) j["reference_notes"] = *nb.reference_notes;
}
void from_json(const json& j, Notebook& nb) {
    j.at("id").get_to(nb.id);
    j.at("title").get_to(nb.title);
    j.at("user_id").get_to(nb.user_id);
    j.at("transcript").get_to(nb.transcript);
    j.at("micronotes").get_to(nb.micronotes);
    j.at("expansions").get_to(nb.expansions);
    nb.ablation_expansions = j.value("ablation_expansions", std::map<std::string, ExpandedNote>{});
    nb.cue_generation = j.value("cue_generation", std::int64_t{0});
    j.at("events").get_to(nb.events);
    auto mode = j.at("ordering_mode").get<std::string>();
    auto parsed = ordering_mode_from(mode);
    if (!parsed) bad_enum("ordering_mode", mode);
    nb.ordering_mode = *parsed;
    get_optional(j, "themes", nb.themes);
    get_optional(j, "cue_questions", nb.cue_questions);
    get_optional(j, "summary", nb.summary);
    get_optional(j, "reference_notes", nb.reference_notes);
}

std::string canonical_dump(const json& j) {
    // nlohmann::json objects are std::map-backed, so keys come out sorted.
    return j.dump(2, ' ', false, json::error_handler_t::strict) + "\n";
}

}  // namespace noteeline
