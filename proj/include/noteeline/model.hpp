#pragma once
// Shared domain types for notebooks, micronotes and their expansions.
//
// Everything here is a plain value type. validate_notebook() is the single
// place where the cross-field invariants are checked; the store and the API
// call it before persisting anything.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace noteeline {

// UTC wall-clock instant with millisecond resolution.
struct WallTime {
    std::int64_t epoch_ms = 0;

    static WallTime now();
    static WallTime from_iso8601(std::string_view s);  // throws Error(ValidationFailed)
    std::string to_iso8601() const;                     // "2024-05-01T12:00:00.000Z"

    auto operator<=>(const WallTime&) const = default;
};

inline constexpr std::size_t kMaxMicronoteChars = 500;
inline constexpr std::size_t kOnboardingExampleCount = 3;
inline constexpr std::size_t kCueQuestionCount = 5;
inline constexpr std::size_t kCueOptionCount = 4;

struct TranscriptSegment {
    std::string text;
    double start = 0.0;     // seconds
    double duration = 0.0;  // seconds

    double end() const { return start + duration; }
    bool operator==(const TranscriptSegment&) const = default;
};

struct Transcript {
    std::string video_ref;
    std::string language = "en";
    std::vector<TranscriptSegment> segments;

    bool empty() const { return segments.empty(); }
    bool operator==(const Transcript&) const = default;
};

struct Micronote {
    std::string id;
    std::string text;
    double video_time = 0.0;  // playback position when capture began
    WallTime created_wall;
    WallTime finished_wall;

    double writing_seconds() const {
        return static_cast<double>(finished_wall.epoch_ms - created_wall.epoch_ms) / 1000.0;
    }
    bool operator==(const Micronote&) const = default;
};

enum class ExpansionStatus { ok, refused, failed };

std::string_view to_string(ExpansionStatus s);
std::optional<ExpansionStatus> expansion_status_from(std::string_view s);

struct ExpansionFailure {
    std::string code;
    std::string detail;
    bool operator==(const ExpansionFailure&) const = default;
};

struct ExpandedNote {
    std::string micronote_id;
    std::string text;
    std::string model_id;
    std::string prompt_fingerprint;
    WallTime created_wall;
    ExpansionStatus status = ExpansionStatus::ok;
    std::optional<ExpansionFailure> error;  // set when status == failed

    bool is_ok() const { return status == ExpansionStatus::ok; }
    bool operator==(const ExpandedNote&) const = default;
};

struct OnboardingExample {
    std::string clip_ref;
    std::string transcript_excerpt;
    std::string keypoint;
    std::string full_note;
    bool operator==(const OnboardingExample&) const = default;
};

struct UserProfile {
    std::string user_id;
    std::vector<OnboardingExample> examples;  // 0 or exactly 3

    bool onboarded() const { return examples.size() == kOnboardingExampleCount; }
    bool operator==(const UserProfile&) const = default;
};

struct ThemeAssignment {
    std::string theme_name;
    std::vector<std::string> note_ids;
    bool operator==(const ThemeAssignment&) const = default;
};

struct CueQuestion {
    std::string question;
    std::vector<std::string> options;
    int answer_index = 0;
    bool operator==(const CueQuestion&) const = default;
};

enum class PlaybackKind { play, pause, seek, rate_change };

std::string_view to_string(PlaybackKind k);
std::optional<PlaybackKind> playback_kind_from(std::string_view s);

struct PlaybackEvent {
    PlaybackKind kind = PlaybackKind::play;
    double video_time = 0.0;
    std::optional<double> target_time;  // seek only
    WallTime wall;
    bool operator==(const PlaybackEvent&) const = default;
};

enum class OrderingMode { by_time, by_theme };

std::string_view to_string(OrderingMode m);
std::optional<OrderingMode> ordering_mode_from(std::string_view s);

struct Notebook {
    std::string id;
    std::string title;
    std::string user_id;
    Transcript transcript;
    std::vector<Micronote> micronotes;
    std::map<std::string, ExpandedNote> expansions;
    // Expansions produced without onboarding examples (style ablation arm).
    std::map<std::string, ExpandedNote> ablation_expansions;
    std::optional<std::vector<ThemeAssignment>> themes;
    std::optional<std::vector<CueQuestion>> cue_questions;
    std::int64_t cue_generation = 0;
    std::optional<std::string> summary;
    std::optional<std::string> reference_notes;  // user's manual notes, for style evaluation
    std::vector<PlaybackEvent> events;
    OrderingMode ordering_mode = OrderingMode::by_time;

    const Micronote* find_micronote(std::string_view note_id) const;
    Micronote* find_micronote(std::string_view note_id);
    const ExpandedNote* ok_expansion(std::string_view note_id) const;
    std::size_t ok_expansion_count() const;
    // Smallest "m<N>" id not already taken.
    std::string next_micronote_id() const;

    bool operator==(const Notebook&) const = default;
};

struct Violation {
    std::string field;
    std::string rule;

    std::string describe() const { return field + " " + rule; }
    bool operator==(const Violation&) const = default;
};

// Ids that are safe as file names: [A-Za-z0-9_-], 1..64 chars.
bool is_safe_id(std::string_view id);

std::vector<Violation> validate_notebook(const Notebook& nb);
std::vector<Violation> validate_profile(const UserProfile& profile);
std::vector<Violation> validate_micronote(const Micronote& note);
std::vector<Violation> validate_cue_question(const CueQuestion& q, std::string_view field);
std::vector<Violation> validate_onboarding_example(const OnboardingExample& ex, std::string_view field);

std::vector<std::string> describe(const std::vector<Violation>& violations);

}  // namespace noteeline
