#pragma once
// JSON mapping for the domain types. Field names here are the published
// document schema; absent optionals are omitted rather than written as null.
//
// from_json overloads throw nlohmann::json::exception on missing or
// mistyped fields and Error(ValidationFailed) on bad enum strings.

#include <json.hpp>

#include "noteeline/model.hpp"

namespace noteeline {

using json = nlohmann::json;

void to_json(json& j, const WallTime& t);
void from_json(const json& j, WallTime& t);
void to_json(json& j, const TranscriptSegment& s);
void from_json(const json& j, TranscriptSegment& s);
void to_json(json& j, const Transcript& t);
void from_json(const json& j, Transcript& t);
void to_json(json& j, const Micronote& m);
void from_json(const json& j, Micronote& m);
void to_json(json& j, const ExpandedNote& e);
void from_json(const json& j, ExpandedNote& e);
void to_json(json& j, const OnboardingExample& e);
void from_json(const json& j, OnboardingExample& e);
void to_json(json& j, const UserProfile& p);
void from_json(const json& j, UserProfile& p);
void to_json(json& j, const ThemeAssignment& t);
void from_json(const json& j, ThemeAssignment& t);
void to_json(json& j, const CueQuestion& q);
void from_json(const json& j, CueQuestion& q);
void to_json(json& j, const PlaybackEvent& e);
void from_json(const json& j, PlaybackEvent& e);
void to_json(json& j, const Notebook& nb);
void from_json(const json& j, Notebook& nb);

// Sorted keys, two-space indent, LF line endings, trailing newline.
std::string canonical_dump(const json& j);

}  // namespace noteeline
