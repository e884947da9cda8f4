#pragma once
// Prompt rendering and LLM-backed note operations: expansion, theme
// organization, cue questions and summaries.
//
// Structured responses (themes, cues) must be a fenced JSON block. A response
// that fails to parse or validate gets exactly one repair retry that shows the
// model its own output and the schema; a second failure is a ParseError.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "noteeline/llm_gateway.hpp"
#include "noteeline/model.hpp"
#include "noteeline/transcript.hpp"

namespace noteeline::synthesis {

struct PromptTemplates {
    std::string expansion_system;
    std::string expansion_user;
    std::string theme_system;
    std::string theme_user;
    std::string cue_system;
    std::string cue_user;
    std::string summary_system;
    std::string summary_user;
    std::string repair_user;

    // Copies of prompts/*.txt compiled into the library.
    static PromptTemplates defaults();
    // Reads <dir>/<name>.txt for each template; missing files keep the default.
    static PromptTemplates load_dir(const std::filesystem::path& dir);
    static const std::vector<std::string>& file_names();  // "expansion.system", ...

    bool operator==(const PromptTemplates&) const = default;
};

// Replaces {{name}} placeholders in one pass; substituted text is not rescanned.
// Unknown placeholders are left as-is.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

struct SynthesisConfig {
    llm::GenerationConfig generation;
    transcript::WindowConfig window;
    std::vector<std::string> banned_starters{"The speaker says", "In this video", "This video"};
    llm::RefusalPatterns refusal;
    int max_concurrency = 4;
};

struct ExpansionRequest {
    Micronote micronote;
    transcript::TranscriptWindow window;
    std::vector<OnboardingExample> examples;
    bool personalized = true;  // false: ablation arm, zero examples

    void validate() const;  // throws Error(ValidationFailed)
};

llm::PromptBundle build_expansion_prompt(const ExpansionRequest& req, const PromptTemplates& templates,
                                         const SynthesisConfig& cfg);
llm::PromptBundle build_theme_prompt(const Notebook& nb, const PromptTemplates& templates,
                                     const SynthesisConfig& cfg);
llm::PromptBundle build_cue_prompt(const Notebook& nb, std::int64_t nonce, const PromptTemplates& templates,
                                   const SynthesisConfig& cfg);
llm::PromptBundle build_summary_prompt(const Notebook& nb, const PromptTemplates& templates,
                                       const SynthesisConfig& cfg);

// Body of the first ```-fenced block (language tag dropped); a bare JSON
// array is accepted too. nullopt when neither is present.
std::optional<std::string> extract_fenced_json(std::string_view response);

// Both throw ParseError(raw_text, reason) on any schema or invariant violation.
std::vector<ThemeAssignment> parse_theme_response(std::string_view response, const Notebook& nb);
std::vector<CueQuestion> parse_cue_response(std::string_view response);

extern const char* const kThemeSchema;
extern const char* const kCueSchema;

struct ExpandOptions {
    bool personalized = true;
    std::optional<std::string> only_note;
};

class Synthesizer {
public:
    explicit Synthesizer(llm::Gateway& gateway, SynthesisConfig cfg = {},
                         PromptTemplates templates = PromptTemplates::defaults());

    const SynthesisConfig& config() const { return cfg_; }
    const PromptTemplates& templates() const { return templates_; }

    // profile may be null only when personalized is false.
    ExpansionRequest make_request(const Notebook& nb, const Micronote& note, const UserProfile* profile,
                                  bool personalized) const;
    std::string expansion_fingerprint(const Notebook& nb, const Micronote& note, const UserProfile* profile,
                                      bool personalized) const;

    // Never throws for gateway problems: they become status=failed.
    ExpandedNote expand_micronote(const ExpansionRequest& req);

    // Attempts every micronote lacking an ok expansion (in the target map).
    // Throws ValidationFailed, NotOnboarded, UnknownNote.
    Notebook expand_all(Notebook nb, const UserProfile& profile, const ExpandOptions& opts = {});

    // Throws TooFewNotes, ParseError, GatewayError.
    std::vector<ThemeAssignment> organize_by_theme(const Notebook& nb);
    // Throws NoNotes, ParseError, GatewayError.
    std::vector<CueQuestion> generate_cue_questions(const Notebook& nb, std::int64_t nonce = 0);
    // Throws NoNotes, GatewayError.
    std::string generate_summary(const Notebook& nb);

private:
    template <typename Parse>
    auto structured_call(const llm::PromptBundle& bundle, std::string_view schema, Parse&& parse)
        -> decltype(parse(std::string_view{}));

    llm::Gateway& gateway_;
    SynthesisConfig cfg_;
    PromptTemplates templates_;
};

// Generates cue questions when none exist, or a fresh set (next nonce) when
// regenerate is set; otherwise returns nb unchanged without a model call.
Notebook refresh_cue_questions(Synthesizer& synth, Notebook nb, bool regenerate);

// Pure notebook edits.

// Sets themes and switches to by_theme.
Notebook apply_themes(Notebook nb, std::vector<ThemeAssignment> themes);
// Throws NotInThemeMode, UnknownNote.
Notebook move_note(Notebook nb, std::string_view note_id, std::string_view target_theme);
Notebook order_by_time(Notebook nb);
// Throws NotInThemeMode when no themes exist.
Notebook order_by_theme(Notebook nb);

}  // namespace noteeline::synthesis
