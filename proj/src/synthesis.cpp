#include "noteeline/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>
#include <utility>

#include <json.hpp>

#include "noteeline/errors.hpp"
#include "noteeline/fsutil.hpp"
#include "noteeline/text.hpp"

namespace noteeline::synthesis {

using json = nlohmann::json;

namespace {

// Generated from prompts/*.txt at configure time.
const std::map<std::string, std::string>& embedded_prompts() {
    static const std::map<std::string, std::string> prompts = {
#include "prompt_defaults.inc"
    };
    return prompts;
}

std::string* template_slot(PromptTemplates& t, const std::string& name) {
    if (name == "expansion.system") return &t.expansion_system;
    if (name == "expansion.user") return &t.expansion_user;
    if (name == "theme.system") return &t.theme_system;
    if (name == "theme.user") return &t.theme_user;
    if (name == "cue.system") return &t.cue_system;
    if (name == "cue.user") return &t.cue_user;
    if (name == "summary.system") return &t.summary_system;
    if (name == "summary.user") return &t.summary_user;
    if (name == "repair.user") return &t.repair_user;
    return nullptr;
}

std::string render_examples(const std::vector<OnboardingExample>& examples) {
    if (examples.empty()) return "(no examples)";
    std::vector<std::string> blocks;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        blocks.push_back("Example " + std::to_string(i + 1) + "\nTranscript: " + text::trim_copy(ex.transcript_excerpt) +
                         "\nKeypoint: " + text::trim_copy(ex.keypoint) +
                         "\nFull note: " + text::trim_copy(ex.full_note));
    }
    return text::join(blocks, "\n\n");
}

std::string render_banned(const std::vector<std::string>& banned) {
    std::vector<std::string> quoted;
    for (const auto& b : banned) quoted.push_back("\"" + b + "\"");
    return quoted.empty() ? "(none)" : text::join(quoted, ", ");
}

// ok expansions in capture order
std::vector<std::pair<const Micronote*, const ExpandedNote*>> ok_notes(const Notebook& nb) {
    std::vector<std::pair<const Micronote*, const ExpandedNote*>> out;
    for (const auto& m : nb.micronotes) {
        if (const auto* e = nb.ok_expansion(m.id)) out.emplace_back(&m, e);
    }
    return out;
}

std::string bullet_keypoints(const Notebook& nb) {
    std::vector<std::string> lines;
    for (const auto& [m, e] : ok_notes(nb)) lines.push_back("- " + text::trim_copy(e->text));
    return text::join(lines, "\n");
}

json parse_json_block(std::string_view response) {
    auto block = extract_fenced_json(response);
    if (!block) throw ParseError(std::string(response), "no fenced JSON block in response");
    try {
        return json::parse(*block);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(response), std::string("invalid JSON: ") + e.what());
    }
}

}  // namespace

const char* const kThemeSchema =
    R"([{"theme": string, "note_ids": [string, ...]}, ...]  -- note_ids must be ids from the note list, each used at most once)";
const char* const kCueSchema =
    R"([{"question": string, "options": [string, string, string, string], "answer_index": 0..3}] -- exactly 5 items, options pairwise distinct)";

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    for (const auto& [name, body] : embedded_prompts()) {
        if (auto* slot = template_slot(t, name)) *slot = body;
    }
    return t;
}

const std::vector<std::string>& PromptTemplates::file_names() {
    static const std::vector<std::string> names = {
        "expansion.system", "expansion.user", "theme.system", "theme.user", "cue.system",
        "cue.user",         "summary.system", "summary.user", "repair.user",
    };
    return names;
}

PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir) {
    PromptTemplates t = defaults();
    for (const auto& name : file_names()) {
        auto path = dir / (name + ".txt");
        std::error_code ec;
        if (std::filesystem::exists(path, ec)) *template_slot(t, name) = fsutil::read_file(path);
    }
    return t;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        auto name = std::string(tmpl.substr(open + 2, close - open - 2));
        if (auto it = values.find(name); it != values.end()) {
            out.append(it->second);
        } else {
            out.append(tmpl.substr(open, close + 2 - open));
        }
        pos = close + 2;
    }
    return out;
}

void ExpansionRequest::validate() const {
    auto v = validate_micronote(micronote);
    if (!v.empty()) throw ListError(ErrorCode::ValidationFailed, describe(v));
    if (personalized && examples.size() != kOnboardingExampleCount) {
        throw Error(ErrorCode::ValidationFailed, "personalized expansion needs exactly 3 onboarding examples");
    }
    if (!personalized && !examples.empty()) {
        throw Error(ErrorCode::ValidationFailed, "no-personalization expansion takes no examples");
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        auto ev = validate_onboarding_example(examples[i], "examples." + std::to_string(i));
        if (!ev.empty()) throw ListError(ErrorCode::ValidationFailed, describe(ev));
    }
}

llm::PromptBundle build_expansion_prompt(const ExpansionRequest& req, const PromptTemplates& templates,
                                         const SynthesisConfig& cfg) {
    req.validate();
    auto system = render_template(templates.expansion_system,
                                  {{"banned_starters", render_banned(cfg.banned_starters)}});
    auto window = text::is_blank(req.window.text) ? std::string("(no transcript available)")
                                                  : text::trim_copy(req.window.text);
    auto user = render_template(templates.expansion_user, {
                                                              {"examples", render_examples(req.examples)},
                                                              {"window", window},
                                                              {"micronote", text::trim_copy(req.micronote.text)},
                                                          });
    return llm::PromptBundle::make(std::move(system), std::move(user), cfg.generation);
}

llm::PromptBundle build_theme_prompt(const Notebook& nb, const PromptTemplates& templates,
                                     const SynthesisConfig& cfg) {
    std::vector<std::string> lines;
    for (const auto& [m, e] : ok_notes(nb)) lines.push_back("[" + m->id + "] " + text::trim_copy(e->text));
    auto user = render_template(templates.theme_user, {{"keypoints", text::join(lines, "\n")}});
    return llm::PromptBundle::make(templates.theme_system, std::move(user), cfg.generation);
}

llm::PromptBundle build_cue_prompt(const Notebook& nb, std::int64_t nonce, const PromptTemplates& templates,
                                   const SynthesisConfig& cfg) {
    auto user = render_template(templates.cue_user,
                                {{"keypoints", bullet_keypoints(nb)}, {"nonce", std::to_string(nonce)}});
    return llm::PromptBundle::make(templates.cue_system, std::move(user), cfg.generation);
}

llm::PromptBundle build_summary_prompt(const Notebook& nb, const PromptTemplates& templates,
                                       const SynthesisConfig& cfg) {
    auto context = transcript::full_text(nb.transcript);
    if (text::is_blank(context)) context = "(no transcript available)";
    auto user = render_template(templates.summary_user, {{"keypoints", bullet_keypoints(nb)}, {"context", context}});
    return llm::PromptBundle::make(templates.summary_system, std::move(user), cfg.generation);
}

std::optional<std::string> extract_fenced_json(std::string_view response) {
    auto open = response.find("```");
    if (open == std::string_view::npos) {
        auto trimmed = text::trim(response);
        if (!trimmed.empty() && (trimmed.front() == '[' || trimmed.front() == '{')) return std::string(trimmed);
        return std::nullopt;
    }
    auto body_start = response.find('\n', open + 3);
    if (body_start == std::string_view::npos) return std::string{};
    ++body_start;
    auto close = response.find("```", body_start);
    auto body = close == std::string_view::npos ? response.substr(body_start)
                                                : response.substr(body_start, close - body_start);
    return std::string(text::trim(body));
}

std::vector<ThemeAssignment> parse_theme_response(std::string_view response, const Notebook& nb) {
    const std::string raw(response);
    auto doc = parse_json_block(response);
    if (!doc.is_array()) throw ParseError(raw, "expected a JSON array of themes");
    if (doc.empty()) throw ParseError(raw, "no themes returned");

    std::vector<ThemeAssignment> themes;
    std::set<std::string> seen_ids;
    std::set<std::string> seen_names;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        auto where = "theme " + std::to_string(i) + ": ";
        if (!item.is_object()) throw ParseError(raw, where + "expected an object");
        if (!item.contains("theme") || !item["theme"].is_string()) {
            throw ParseError(raw, where + "missing string key 'theme'");
        }
        if (!item.contains("note_ids") || !item["note_ids"].is_array()) {
            throw ParseError(raw, where + "missing array key 'note_ids'");
        }
        ThemeAssignment t;
        t.theme_name = text::trim_copy(item["theme"].get<std::string>());
        if (t.theme_name.empty()) throw ParseError(raw, where + "empty theme name");
        if (!seen_names.insert(t.theme_name).second) throw ParseError(raw, where + "duplicate theme name");
        for (const auto& id : item["note_ids"]) {
            if (!id.is_string()) throw ParseError(raw, where + "note ids must be strings");
            auto sid = id.get<std::string>();
            if (!nb.find_micronote(sid)) throw ParseError(raw, where + "unknown note id '" + sid + "'");
            if (!seen_ids.insert(sid).second) throw ParseError(raw, where + "note id '" + sid + "' used twice");
            t.note_ids.push_back(std::move(sid));
        }
        if (t.note_ids.empty()) throw ParseError(raw, where + "theme has no notes");
        themes.push_back(std::move(t));
    }
    return themes;
}

std::vector<CueQuestion> parse_cue_response(std::string_view response) {
    const std::string raw(response);
    auto doc = parse_json_block(response);
    if (!doc.is_array()) throw ParseError(raw, "expected a JSON array of questions");
    if (doc.size() != kCueQuestionCount) {
        throw ParseError(raw, "expected exactly 5 questions, got " + std::to_string(doc.size()));
    }
    std::vector<CueQuestion> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        auto where = "question " + std::to_string(i) + ": ";
        if (!item.is_object()) throw ParseError(raw, where + "expected an object");
        if (!item.contains("question") || !item["question"].is_string()) {
            throw ParseError(raw, where + "missing string key 'question'");
        }
        if (!item.contains("options") || !item["options"].is_array()) {
            throw ParseError(raw, where + "missing array key 'options'");
        }
        if (!item.contains("answer_index") || !item["answer_index"].is_number_integer()) {
            throw ParseError(raw, where + "missing integer key 'answer_index'");
        }
        CueQuestion q;
        q.question = text::trim_copy(item["question"].get<std::string>());
        for (const auto& o : item["options"]) {
            if (!o.is_string()) throw ParseError(raw, where + "options must be strings");
            q.options.push_back(text::trim_copy(o.get<std::string>()));
        }
        auto idx = item["answer_index"].get<std::int64_t>();
        q.answer_index = (idx < 0 || idx > 3) ? -1 : static_cast<int>(idx);
        auto v = validate_cue_question(q, "question " + std::to_string(i));
        if (!v.empty()) throw ParseError(raw, v.front().describe());
        out.push_back(std::move(q));
    }
    return out;
}

Synthesizer::Synthesizer(llm::Gateway& gateway, SynthesisConfig cfg, PromptTemplates templates)
    : gateway_(gateway), cfg_(std::move(cfg)), templates_(std::move(templates)) {
    cfg_.generation.validate();
}

ExpansionRequest Synthesizer::make_request(const Notebook& nb, const Micronote& note, const UserProfile* profile,
                                           bool personalized) const {
    ExpansionRequest req;
    req.micronote = note;
    req.personalized = personalized;
    if (!nb.transcript.empty()) req.window = transcript::window_around(nb.transcript, note.video_time, cfg_.window);
    if (personalized) {
        if (!profile || !profile->onboarded()) {
            throw Error(ErrorCode::NotOnboarded, "user has not completed onboarding");
        }
        req.examples = profile->examples;
    }
    return req;
}

std::string Synthesizer::expansion_fingerprint(const Notebook& nb, const Micronote& note, const UserProfile* profile,
                                               bool personalized) const {
    return build_expansion_prompt(make_request(nb, note, profile, personalized), templates_, cfg_).fingerprint;
}

ExpandedNote Synthesizer::expand_micronote(const ExpansionRequest& req) {
    auto bundle = build_expansion_prompt(req, templates_, cfg_);
    ExpandedNote out;
    out.micronote_id = req.micronote.id;
    out.prompt_fingerprint = bundle.fingerprint;
    out.model_id = cfg_.generation.model_id;
    try {
        auto result = gateway_.complete(bundle, cfg_.generation);
        if (!result.model_id.empty()) out.model_id = result.model_id;
        out.created_wall = result.created_wall;
        out.text = text::trim_copy(result.text);
        out.status = llm::detect_refusal(result.text, cfg_.refusal) ? ExpansionStatus::refused : ExpansionStatus::ok;
    } catch (const Error& e) {
        out.status = ExpansionStatus::failed;
        out.created_wall = WallTime::now();
        out.error = ExpansionFailure{std::string(error_name(e.code())), e.detail()};
    }
    return out;
}

Notebook Synthesizer::expand_all(Notebook nb, const UserProfile& profile, const ExpandOptions& opts) {
    auto violations = validate_notebook(nb);
    if (!violations.empty()) throw ListError(ErrorCode::ValidationFailed, describe(violations));
    if (opts.only_note && !nb.find_micronote(*opts.only_note)) {
        throw Error(ErrorCode::UnknownNote, "unknown note id " + *opts.only_note);
    }
    auto& target = opts.personalized ? nb.expansions : nb.ablation_expansions;

    std::vector<ExpansionRequest> pending;
    for (const auto& m : nb.micronotes) {
        if (opts.only_note && m.id != *opts.only_note) continue;
        auto it = target.find(m.id);
        if (it != target.end() && it->second.is_ok()) continue;
        pending.push_back(make_request(nb, m, &profile, opts.personalized));
    }
    if (pending.empty()) return nb;

    std::vector<ExpandedNote> results(pending.size());
    std::vector<std::exception_ptr> errors(pending.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < pending.size(); i = next++) {
            try {
                results[i] = expand_micronote(pending[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::size_t n_workers = std::min<std::size_t>(pending.size(), static_cast<std::size_t>(std::max(1, cfg_.max_concurrency)));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    for (auto& r : results) target[r.micronote_id] = std::move(r);
    return nb;
}

template <typename Parse>
auto Synthesizer::structured_call(const llm::PromptBundle& bundle, std::string_view schema, Parse&& parse)
    -> decltype(parse(std::string_view{})) {
    auto first = gateway_.complete(bundle, cfg_.generation);
    std::string reason;
    try {
        return parse(first.text);
    } catch (const ParseError& e) {
        reason = e.reason();
    }
    auto repair_user = render_template(templates_.repair_user, {
                                                                   {"original", bundle.user},
                                                                   {"reason", reason},
                                                                   {"malformed", first.text},
                                                                   {"schema", std::string(schema)},
                                                               });
    auto repair = llm::PromptBundle::make(bundle.system, std::move(repair_user), cfg_.generation);
    auto second = gateway_.complete(repair, cfg_.generation);
    return parse(second.text);
}

std::vector<ThemeAssignment> Synthesizer::organize_by_theme(const Notebook& nb) {
    if (nb.ok_expansion_count() < 2) {
        throw Error(ErrorCode::TooFewNotes, "theme organization needs at least 2 expanded notes");
    }
    auto bundle = build_theme_prompt(nb, templates_, cfg_);
    return structured_call(bundle, kThemeSchema,
                           [&nb](std::string_view text) { return parse_theme_response(text, nb); });
}

std::vector<CueQuestion> Synthesizer::generate_cue_questions(const Notebook& nb, std::int64_t nonce) {
    if (nb.ok_expansion_count() < 1) throw Error(ErrorCode::NoNotes, "cue questions need at least 1 expanded note");
    auto bundle = build_cue_prompt(nb, nonce, templates_, cfg_);
    return structured_call(bundle, kCueSchema, [](std::string_view text) { return parse_cue_response(text); });
}

std::string Synthesizer::generate_summary(const Notebook& nb) {
    if (nb.ok_expansion_count() < 1) throw Error(ErrorCode::NoNotes, "summary needs at least 1 expanded note");
    auto bundle = build_summary_prompt(nb, templates_, cfg_);
    return gateway_.complete(bundle, cfg_.generation).text;
}

Notebook apply_themes(Notebook nb, std::vector<ThemeAssignment> themes) {
    nb.themes = std::move(themes);
    nb.ordering_mode = OrderingMode::by_theme;
    return nb;
}

Notebook move_note(Notebook nb, std::string_view note_id, std::string_view target_theme) {
    if (nb.ordering_mode != OrderingMode::by_theme || !nb.themes) {
        throw Error(ErrorCode::NotInThemeMode, "notebook is not ordered by theme");
    }
    if (!nb.find_micronote(note_id)) throw Error(ErrorCode::UnknownNote, "unknown note id " + std::string(note_id));
    if (text::is_blank(target_theme)) throw Error(ErrorCode::ValidationFailed, "target theme name is empty");

    auto& themes = *nb.themes;
    for (auto it = themes.begin(); it != themes.end(); ++it) {
        auto pos = std::find(it->note_ids.begin(), it->note_ids.end(), note_id);
        if (pos == it->note_ids.end()) continue;
        it->note_ids.erase(pos);
        if (it->note_ids.empty()) themes.erase(it);
        break;
    }
    auto target = std::find_if(themes.begin(), themes.end(),
                               [&](const ThemeAssignment& t) { return t.theme_name == target_theme; });
    if (target == themes.end()) {
        themes.push_back(ThemeAssignment{std::string(target_theme), {std::string(note_id)}});
    } else {
        target->note_ids.emplace_back(note_id);
    }
    return nb;
}

Notebook order_by_time(Notebook nb) {
    nb.ordering_mode = OrderingMode::by_time;
    return nb;
}

Notebook order_by_theme(Notebook nb) {
    if (!nb.themes) throw Error(ErrorCode::NotInThemeMode, "notebook has no themes yet");
    nb.ordering_mode = OrderingMode::by_theme;
    return nb;
}

Notebook refresh_cue_questions(Synthesizer& synth, Notebook nb, bool regenerate) {
    if (nb.cue_questions && !regenerate) return nb;
    auto nonce = nb.cue_questions ? nb.cue_generation + 1 : nb.cue_generation;
    nb.cue_questions = synth.generate_cue_questions(nb, nonce);
    nb.cue_generation = nonce;
    return nb;
}

}  // namespace noteeline::synthesis
