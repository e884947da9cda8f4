#include "noteeline/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

#include "noteeline/api.hpp"
#include "noteeline/errors.hpp"
#include "noteeline/evaluation.hpp"
#include "noteeline/fsutil.hpp"
#include "noteeline/model_json.hpp"
#include "noteeline/store.hpp"
#include "noteeline/synthesis.hpp"
#include "noteeline/text.hpp"
#include "noteeline/transcript.hpp"

namespace noteeline::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string store_dir;
    std::string prompts_dir;

    std::string file;
    std::string format;
    std::string id;
    std::string title;
    std::string user;
    std::string notes_file;
    std::string video_ref;
    std::string language;
    std::string reference_file;
    bool force = false;

    std::string examples_file;

    std::string notebook;
    bool no_personalization = false;
    std::string only_note;
    bool regenerate = false;

    std::string handwritten;
    std::size_t n_top = stylometry::kDefaultTopWords;
    bool as_json = false;

    std::string out_file;
    std::string bind;
};

json read_json_file(const std::string& path) {
    auto raw = fsutil::read_file(path);
    try {
        return json::parse(raw);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidRequest, path + ": " + e.what());
    }
}

template <typename T>
T json_as(const json& j, const std::string& what) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidRequest, what + ": " + e.what());
    }
}

transcript::CaptionFormat guess_format(const std::string& file, const std::string& flag) {
    if (!flag.empty()) return transcript::format_from_name(flag);
    auto ext = text::ascii_lower(fs::path(file).extension().string());
    if (ext == ".vtt") return transcript::CaptionFormat::vtt;
    if (ext == ".srt") return transcript::CaptionFormat::srt;
    if (ext == ".json") return transcript::CaptionFormat::json;
    throw Error(ErrorCode::InvalidRequest, "cannot infer caption format from '" + file + "'; pass --format");
}

// notes file: [micronote...] or {"micronotes": [...], "events": [...], "reference_notes": "..."}.
void apply_notes_file(Notebook& nb, const json& doc, const std::function<WallTime()>& clock) {
    const json* notes = &doc;
    if (doc.is_object()) {
        if (auto it = doc.find("events"); it != doc.end()) {
            auto events = json_as<std::vector<PlaybackEvent>>(*it, "events");
            nb.events.insert(nb.events.end(), events.begin(), events.end());
        }
        if (auto it = doc.find("reference_notes"); it != doc.end() && it->is_string()) {
            nb.reference_notes = it->get<std::string>();
        }
        auto it = doc.find("micronotes");
        if (it == doc.end()) return;
        notes = &*it;
    }
    if (!notes->is_array()) throw Error(ErrorCode::InvalidRequest, "micronotes must be an array");
    for (const auto& entry : *notes) {
        if (!entry.is_object()) throw Error(ErrorCode::InvalidRequest, "micronote entries must be objects");
        Micronote m;
        m.id = entry.value("id", std::string{});
        m.text = json_as<std::string>(entry.at("text"), "micronote text");
        m.video_time = json_as<double>(entry.at("video_time"), "micronote video_time");
        auto now = clock();
        m.created_wall = entry.contains("created_wall") ? json_as<WallTime>(entry["created_wall"], "created_wall") : now;
        m.finished_wall =
            entry.contains("finished_wall") ? json_as<WallTime>(entry["finished_wall"], "finished_wall") : m.created_wall;
        if (m.id.empty()) m.id = nb.next_micronote_id();
        nb.micronotes.push_back(std::move(m));
    }
}

class Runner {
public:
    Runner(const Options& o, std::ostream& out, const CliContext& ctx, llm::EnvLookup env)
        : o_(o), out_(out), ctx_(ctx), env_(std::move(env)) {
        if (!o_.store_dir.empty()) {
            store_dir_ = o_.store_dir;
        } else if (auto d = env_("NOTEELINE_STORE_DIR"); d && !d->empty()) {
            store_dir_ = *d;
        } else {
            store_dir_ = "noteeline-data";
        }
        store_.emplace(store_dir_);
    }

    int ingest() {
        auto bytes = fsutil::read_file(o_.file);
        Notebook nb;
        nb.transcript = transcript::parse(bytes, guess_format(o_.file, o_.format));
        nb.transcript.video_ref = o_.video_ref.empty() ? fs::path(o_.file).filename().string() : o_.video_ref;
        if (!o_.language.empty()) nb.transcript.language = o_.language;
        nb.title = o_.title.empty() ? fs::path(o_.file).stem().string() : o_.title;
        nb.user_id = o_.user;
        if (!o_.notes_file.empty()) apply_notes_file(nb, read_json_file(o_.notes_file), clock());
        if (!o_.reference_file.empty()) nb.reference_notes = fsutil::read_file(o_.reference_file);
        nb.id = o_.id.empty() ? store::derive_notebook_id(nb) : o_.id;
        if (!is_safe_id(nb.id)) throw Error(ErrorCode::InvalidRequest, "notebook id must match [A-Za-z0-9_-]{1,64}");
        if (!o_.force && store_->has_notebook(nb.id)) {
            throw Error(ErrorCode::Conflict, "notebook " + nb.id + " already exists (use --force to replace)");
        }
        store_->save_notebook(nb);
        out_ << "ingested " << nb.id << ": " << nb.transcript.segments.size() << " segments, "
             << nb.micronotes.size() << " micronotes\n";
        return 0;
    }

    int onboard() {
        auto doc = read_json_file(o_.examples_file);
        const json* list = &doc;
        if (doc.is_object() && doc.contains("examples")) list = &doc["examples"];
        if (!list->is_array()) throw ListError(ErrorCode::InvalidOnboarding, {"examples must be an array"});
        UserProfile profile;
        profile.user_id = o_.user;
        std::vector<std::string> reasons;
        if (list->size() != kOnboardingExampleCount) {
            reasons.push_back("examples length 3 (got " + std::to_string(list->size()) + ")");
        }
        for (std::size_t i = 0; i < list->size(); ++i) {
            auto ex = json_as<OnboardingExample>((*list)[i], "examples." + std::to_string(i));
            for (const auto& v : validate_onboarding_example(ex, "examples." + std::to_string(i))) {
                reasons.push_back(v.describe());
            }
            profile.examples.push_back(std::move(ex));
        }
        if (!reasons.empty()) throw ListError(ErrorCode::InvalidOnboarding, reasons);
        store_->save_profile(profile);
        out_ << "onboarded " << profile.user_id << ": " << profile.examples.size() << " examples\n";
        return 0;
    }

    int expand(std::ostream& err) {
        synthesis::ExpandOptions opts;
        opts.personalized = !o_.no_personalization;
        if (!o_.only_note.empty()) opts.only_note = o_.only_note;
        auto synth = synthesizer();
        auto nb = store_->update_notebook(o_.notebook, [&](Notebook& doc) {
            UserProfile profile;
            profile.user_id = doc.user_id;
            if (opts.personalized) {
                auto found = doc.user_id.empty() ? std::nullopt : store_->find_profile(doc.user_id);
                if (!found || !found->onboarded()) {
                    throw Error(ErrorCode::NotOnboarded,
                                "user '" + doc.user_id + "' has not completed onboarding (or use --no-personalization)");
                }
                profile = *found;
            }
            doc = synth.expand_all(std::move(doc), profile, opts);
        });

        const auto& map = opts.personalized ? nb.expansions : nb.ablation_expansions;
        std::size_t ok = 0, refused = 0, failed = 0;
        const ExpandedNote* first_failure = nullptr;
        for (const auto& m : nb.micronotes) {
            if (opts.only_note && m.id != *opts.only_note) continue;
            auto it = map.find(m.id);
            if (it == map.end()) continue;
            const auto& e = it->second;
            out_ << m.id << "\t" << to_string(e.status);
            if (e.status == ExpansionStatus::ok) {
                ++ok;
                out_ << "\t" << e.text;
            } else if (e.status == ExpansionStatus::refused) {
                ++refused;
            } else {
                ++failed;
                if (e.error) out_ << "\t" << e.error->code;
                if (!first_failure) first_failure = &e;
            }
            out_ << "\n";
        }
        out_ << (opts.personalized ? "expansions" : "ablation expansions") << ": " << ok << " ok, " << refused
             << " refused, " << failed << " failed\n";
        if (first_failure && first_failure->error) {
            auto code = error_code_from_name(first_failure->error->code).value_or(ErrorCode::Internal);
            err << first_failure->error->code << ": " << first_failure->error->detail << "\n";
            return error_info(code).exit_code;
        }
        return 0;
    }

    int themes() {
        auto synth = synthesizer();
        auto nb = store_->update_notebook(o_.notebook, [&](Notebook& doc) {
            auto themes = synth.organize_by_theme(doc);
            doc = synthesis::apply_themes(std::move(doc), std::move(themes));
        });
        for (const auto& t : *nb.themes) {
            out_ << t.theme_name << "\n";
            for (const auto& id : t.note_ids) out_ << "  " << id << "\n";
        }
        return 0;
    }

    int cues() {
        auto synth = synthesizer();
        auto nb = store_->update_notebook(o_.notebook, [&](Notebook& doc) {
            doc = synthesis::refresh_cue_questions(synth, std::move(doc), o_.regenerate);
        });
        static constexpr const char* letters = "ABCD";
        const auto& qs = *nb.cue_questions;
        for (std::size_t i = 0; i < qs.size(); ++i) {
            out_ << i + 1 << ". " << qs[i].question << "\n";
            for (std::size_t k = 0; k < qs[i].options.size(); ++k) {
                out_ << "   " << letters[k] << ". " << qs[i].options[k] << "\n";
            }
            out_ << "   answer: " << letters[qs[i].answer_index] << "\n";
        }
        return 0;
    }

    int summary() {
        auto synth = synthesizer();
        auto nb = store_->update_notebook(o_.notebook,
                                          [&](Notebook& doc) { doc.summary = synth.generate_summary(doc); });
        out_ << *nb.summary << "\n";
        return 0;
    }

    int eval() {
        auto nb = store_->load_notebook(o_.notebook);
        std::optional<UserProfile> profile;
        if (!nb.user_id.empty()) profile = store_->find_profile(nb.user_id);
        stylometry::EvaluationOptions opts;
        if (!o_.handwritten.empty()) opts.handwritten = fsutil::read_file(o_.handwritten);
        if (o_.n_top == 0) throw Error(ErrorCode::InvalidRequest, "--n-top must be positive");
        opts.n_top = o_.n_top;
        auto report = stylometry::evaluate(nb, profile ? &*profile : nullptr, opts);
        auto as_json = stylometry::to_json(report);
        store_->save_report(nb.id, as_json);
        if (o_.as_json) {
            out_ << as_json.dump(2) << "\n";
        } else {
            out_ << stylometry::render_text(report);
        }
        return 0;
    }

    int export_md() {
        auto md = store::export_markdown(store_->load_notebook(o_.notebook));
        if (o_.out_file.empty()) {
            out_ << md;
        } else {
            fsutil::write_file_atomic(o_.out_file, md);
            out_ << "wrote " << o_.out_file << "\n";
        }
        return 0;
    }

    int serve(std::ostream& err) {
        auto cfg = api::ServiceConfig::from_env(env_);
        cfg.store_dir = store_dir_;
        cfg.gateway = gateway_settings();
        cfg.transport = ctx_.transport;
        cfg.synthesis = synthesis_config();
        cfg.templates = templates();
        std::string bind = o_.bind;
        if (bind.empty()) {
            auto b = env_("NOTEELINE_BIND_ADDR");
            bind = b ? *b : std::string{};
        }
        auto [host, port] = api::parse_bind_addr(bind);
        api::ApiService service(std::move(cfg));
        out_ << "listening on " << host << ":" << port << " (mode " << llm::to_string(service.gateway().mode())
             << ", store " << store_dir_ << ")" << std::endl;
        if (!api::serve(service, host, port)) {
            err << "IO_ERROR: cannot bind " << host << ":" << port << "\n";
            return error_info(ErrorCode::IoError).exit_code;
        }
        return 0;
    }

private:
    std::function<WallTime()> clock() const {
        return ctx_.clock ? ctx_.clock : std::function<WallTime()>([] { return WallTime::now(); });
    }

    llm::GatewaySettings gateway_settings() const {
        auto s = llm::GatewaySettings::from_env(env_, fs::path(store_dir_) / "fixtures" / "llm.json");
        if (ctx_.sleep) s.sleep = ctx_.sleep;
        if (ctx_.clock) s.clock = ctx_.clock;
        return s;
    }

    synthesis::SynthesisConfig synthesis_config() const {
        synthesis::SynthesisConfig cfg;
        cfg.max_concurrency = gateway_settings().max_concurrency;
        return cfg;
    }

    synthesis::PromptTemplates templates() const {
        return o_.prompts_dir.empty() ? synthesis::PromptTemplates::defaults()
                                      : synthesis::PromptTemplates::load_dir(o_.prompts_dir);
    }

    synthesis::Synthesizer synthesizer() {
        if (!gateway_) gateway_ = std::make_unique<llm::Gateway>(gateway_settings(), ctx_.transport);
        return synthesis::Synthesizer(*gateway_, synthesis_config(), templates());
    }

    const Options& o_;
    std::ostream& out_;
    const CliContext& ctx_;
    llm::EnvLookup env_;
    std::string store_dir_;
    std::optional<store::Store> store_;
    std::unique_ptr<llm::Gateway> gateway_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliContext& ctx) {
    Options o;
    CLI::App app{"noteeline: expand micronotes into full notes and evaluate them", "noteeline"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.add_option("--store", o.store_dir, "Store directory (default $NOTEELINE_STORE_DIR or ./noteeline-data)");
    app.add_option("--prompts", o.prompts_dir, "Directory with prompt template overrides");

    auto* ingest = app.add_subcommand("ingest", "Create a notebook from a captions file");
    ingest->add_option("captions", o.file, "VTT, SRT or JSON segments file")->required();
    ingest->add_option("--format", o.format, "vtt|srt|json (default: from extension)")
        ->check(CLI::IsMember({"vtt", "srt", "json"}));
    ingest->add_option("--id", o.id, "Notebook id (default: derived from content)");
    ingest->add_option("--title", o.title, "Notebook title");
    ingest->add_option("--user", o.user, "Owner user id");
    ingest->add_option("--notes", o.notes_file, "JSON micronotes (and optional events) to attach");
    ingest->add_option("--video-ref", o.video_ref, "Video reference stored with the transcript");
    ingest->add_option("--language", o.language, "Transcript language tag");
    ingest->add_option("--reference-notes", o.reference_file, "User's own notes for style evaluation");
    ingest->add_flag("--force", o.force, "Replace an existing notebook");

    auto* onboard = app.add_subcommand("onboard", "Store a user's three onboarding examples");
    onboard->add_option("user", o.user, "User id")->required();
    onboard->add_option("--examples", o.examples_file, "JSON file with 3 examples")->required();

    auto* expand = app.add_subcommand("expand", "Expand pending micronotes");
    expand->add_option("notebook", o.notebook)->required();
    expand->add_flag("--no-personalization", o.no_personalization,
                     "Expand without onboarding examples (stored as the ablation arm)");
    expand->add_option("--note", o.only_note, "Expand only this micronote id");

    auto* themes = app.add_subcommand("themes", "Group expanded notes into themes");
    themes->add_option("notebook", o.notebook)->required();

    auto* cues = app.add_subcommand("cues", "Generate five review questions");
    cues->add_option("notebook", o.notebook)->required();
    cues->add_flag("--regenerate", o.regenerate, "Replace existing questions with a new set");

    auto* summary = app.add_subcommand("summary", "Summarize the notebook");
    summary->add_option("notebook", o.notebook)->required();

    auto* eval = app.add_subcommand("eval", "Print the evaluation report");
    eval->add_option("notebook", o.notebook)->required();
    eval->add_option("--handwritten", o.handwritten, "Reference notes written by the user");
    eval->add_option("--n-top", o.n_top, "Top-N words for the chi-squared distance");
    eval->add_flag("--json", o.as_json, "Print the report as JSON");

    auto* exp = app.add_subcommand("export", "Print the notebook as Markdown");
    exp->add_option("notebook", o.notebook)->required();
    exp->add_option("--out", o.out_file, "Write to a file instead of stdout");

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--bind", o.bind, "host:port (default $NOTEELINE_BIND_ADDR or 127.0.0.1:8080)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << error_name(ErrorCode::InvalidRequest) << ": " << e.what() << "\n";
        return error_info(ErrorCode::InvalidRequest).exit_code;
    }

    auto env = ctx.env ? ctx.env : llm::process_env();
    try {
        Runner r(o, out, ctx, env);
        if (ingest->parsed()) return r.ingest();
        if (onboard->parsed()) return r.onboard();
        if (expand->parsed()) return r.expand(err);
        if (themes->parsed()) return r.themes();
        if (cues->parsed()) return r.cues();
        if (summary->parsed()) return r.summary();
        if (eval->parsed()) return r.eval();
        if (exp->parsed()) return r.export_md();
        if (serve->parsed()) return r.serve(err);
    } catch (const Error& e) {
        err << error_name(e.code()) << ": " << e.what() << "\n";
        return error_info(e.code()).exit_code;
    } catch (const json::exception& e) {
        err << error_name(ErrorCode::InvalidRequest) << ": " << e.what() << "\n";
        return error_info(ErrorCode::InvalidRequest).exit_code;
    } catch (const std::exception& e) {
        err << error_name(ErrorCode::Internal) << ": " << e.what() << "\n";
        return error_info(ErrorCode::Internal).exit_code;
    }
    return 1;
}

}  // namespace noteeline::cli
