// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit code 1
// if any criterion fails. No network: every gateway is replay or a fake.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "demo_script.hpp"
#include "noteeline/api.hpp"
#include "noteeline/cli.hpp"
#include "noteeline/fsutil.hpp"
#include "noteeline/model_json.hpp"
#include "noteeline/store.hpp"
#include "noteeline/stylometry.hpp"
#include "noteeline/synthesis.hpp"
#include "noteeline/transcript.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace noteeline;
using json = nlohmann::json;
using testsupport::TempDir;

namespace {

const std::filesystem::path kSource = testsupport::source_dir();
const std::filesystem::path kDemo = kSource / "data" / "demo";

// Collects the first few failure messages of one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (ok) return;
        ++failures_;
        if (messages_.size() < 5) messages_.push_back(what);
    }
    bool ok() const { return failures_ == 0; }
    std::string summary() const {
        std::string s = std::to_string(failures_) + " failure(s)";
        for (const auto& m : messages_) s += "; " + m;
        return s;
    }

private:
    std::size_t failures_ = 0;
    std::vector<std::string> messages_;
};

using Seconds = std::chrono::duration<double>;

std::string random_ascii(std::mt19937& rng, std::size_t max_words) {
    static const std::string alphabet = "abcdeABCDE'   .,;!?0123xyz";
    static const std::vector<std::string> words = {"the", "a", "memory", "met", "don't", "RNN", "x", "l", "r", "Sleep"};
    std::uniform_int_distribution<std::size_t> n_words(1, max_words), pick(0, words.size() - 1),
        ch(0, alphabet.size() - 1), len(1, 7);
    std::bernoulli_distribution noise(0.3);
    std::string s;
    for (std::size_t i = 0, n = n_words(rng); i < n; ++i) {
        if (noise(rng)) {
            for (std::size_t k = 0, l = len(rng); k < l; ++k) s += alphabet[ch(rng)];
        } else {
            s += words[pick(rng)];
        }
        s += ' ';
    }
    return s;
}

bool has_tokens(const std::string& s) { return !oracle::ascii_tokens(s).empty(); }

// ---------------------------------------------------------------------------

void metric_oracle(Check& c) {
    auto pairs = oracle::corpus_pairs();
    c.expect(pairs.size() >= 5, "need at least 5 corpus pairs");
    for (const auto& [a, b] : pairs) {
        for (std::size_t n : {1u, 3u, 500u}) {
            double got = stylometry::chi_squared_distance(a, b, n).distance;
            double want = static_cast<double>(oracle::chi_squared(a, b, n));
            c.expect(std::abs(got - want) <= 1e-9, fmt::format("pair '{}' n={}: {} vs oracle {}", a, n, got, want));
        }
    }
    std::mt19937 rng(20240301);
    int trials = 0;
    while (trials < 1000) {
        auto a = random_ascii(rng, 30), b = random_ascii(rng, 30);
        if (!has_tokens(a) || !has_tokens(b)) continue;
        ++trials;
        double self = stylometry::chi_squared_distance(a, a).distance;
        double ab = stylometry::chi_squared_distance(a, b).distance;
        double ba = stylometry::chi_squared_distance(b, a).distance;
        c.expect(self == 0.0, fmt::format("chi(A,A)={} for '{}'", self, a));
        c.expect(std::abs(ab - ba) <= 1e-9, fmt::format("asymmetric: {} vs {}", ab, ba));
        c.expect(std::abs(ab - static_cast<double>(oracle::chi_squared(a, b, 500))) <= 1e-9, "random pair oracle mismatch");
    }
}

void mendenhall(Check& c) {
    std::mt19937 rng(7);
    int trials = 0;
    while (trials < 1000) {
        auto s = random_ascii(rng, 40);
        if (!has_tokens(s)) continue;
        ++trials;
        auto curve = stylometry::mendenhall_curve(stylometry::style_profile(s));
        double sum = 0.0;
        bool non_negative = true;
        for (double v : curve) {
            sum += v;
            non_negative = non_negative && v >= 0.0;
        }
        c.expect(std::abs(sum - 1.0) <= 1e-9, fmt::format("curve sums to {} for '{}'", sum, s));
        c.expect(non_negative, "negative curve entry for '" + s + "'");
    }
}

void style_ablation(Check& c) {
    auto rows = oracle::load_chi_table((kSource / "tests" / "fixtures" / "chi_table.csv").string());
    c.expect(rows.size() == 12, "chi table should have 12 rows");
    if (rows.empty()) return;
    const auto& p1 = rows.front();
    double p1_pct = stylometry::relative_improvement(p1.with_onboarding, p1.without_onboarding);
    c.expect(p1.participant == "P1" && std::abs(p1_pct - (-5.98)) <= 0.01, fmt::format("P1 improvement {}", p1_pct));
    std::vector<std::pair<double, double>> pairs;
    for (const auto& r : rows) {
        pairs.emplace_back(r.with_onboarding, r.without_onboarding);
        double pct = stylometry::relative_improvement(r.with_onboarding, r.without_onboarding);
        c.expect(std::abs(pct - r.improvement_pct) <= 0.01, fmt::format("{}: {} vs table {}", r.participant, pct, r.improvement_pct));
    }
    double avg = stylometry::averaged_improvement(pairs);
    c.expect(std::abs(avg - 8.33) <= 0.01, fmt::format("averaged improvement {}", avg));

    // Same sign pattern through the full report on fixture texts: examples that
    // pull the style away from the user's own notes give a negative improvement.
    auto fx = json::parse(fsutil::read_file(kSource / "tests" / "fixtures" / "p1_memory.json"));
    std::string hand;
    for (const auto& t : fx["micronotes"]) hand += t.get<std::string>() + "\n";
    const std::string summary = fx["summary_response"].get<std::string>();
    auto r = stylometry::style_match_report(hand, summary, hand + summary);
    c.expect(r.with_examples.distance > r.without_examples.distance, "fixture with-distance should exceed without");
    c.expect(r.improvement_pct < 0, fmt::format("fixture improvement {} should be negative", r.improvement_pct));
    double expect_pct = (r.without_examples.distance - r.with_examples.distance) / r.without_examples.distance * 100;
    c.expect(std::abs(r.improvement_pct - expect_pct) <= 1e-9, "improvement arithmetic");
}

// Counts transport use; any call means the pipeline touched the network path.
class NoNetwork : public llm::ChatTransport {
public:
    llm::ChatResponse send(const llm::ChatRequest&) override {
        ++calls;
        return {0, "", std::nullopt, llm::ChatResponse::Failure::connection, "network disabled"};
    }
    int calls = 0;
};

void pipeline_determinism(Check& c) {
    auto run = [&](const std::filesystem::path& store_dir, std::string& notebook, std::string& markdown) {
        auto net = std::make_shared<NoNetwork>();
        cli::CliContext ctx;
        ctx.transport = net;
        ctx.clock = demo::demo_clock;
        auto fixtures = (kDemo / "fixtures" / "llm.json").string();
        ctx.env = [&](std::string_view k) -> std::optional<std::string> {
            if (k == "NOTEELINE_LLM_MODE") return "replay";
            if (k == "NOTEELINE_LLM_FIXTURES") return fixtures;
            return std::nullopt;
        };
        for (const auto& step : demo::demo_pipeline(kDemo)) {
            if (step[0] == "eval") continue;
            auto args = step;
            args.insert(args.begin(), {"--store", store_dir.string()});
            std::ostringstream out, err;
            int code = cli::run_cli(args, out, err, ctx);
            c.expect(code == 0, step[0] + " exited " + std::to_string(code) + ": " + err.str());
            if (step[0] == "export") markdown = out.str();
        }
        notebook = fsutil::read_file(store::Store(store_dir).notebook_path("met-demo"));
        c.expect(net->calls == 0, "transport was used in replay mode");
    };
    TempDir a, b;
    std::string nb_a, md_a, nb_b, md_b;
    run(a.path(), nb_a, md_a);
    run(b.path(), nb_b, md_b);
    c.expect(!nb_a.empty() && nb_a == nb_b, "notebook JSON differs between runs");
    c.expect(!md_a.empty() && md_a == md_b, "markdown differs between runs");
    auto nb = store::parse_notebook_document(nb_a);
    c.expect(nb.themes && nb.cue_questions && nb.summary, "pipeline did not produce themes, cues and summary");
}

void structured_robustness(Check& c) {
    auto nb = testsupport::lecture_notebook();
    for (const auto& m : nb.micronotes) {
        nb.expansions[m.id] = {m.id, "Full note for " + m.text + ".", "gpt-4-turbo", "fp", testsupport::wall(1),
                               ExpansionStatus::ok, std::nullopt};
    }
    auto fenced = [](const json& j) { return "```json\n" + j.dump() + "\n```"; };
    json cues = json::array();
    for (int i = 0; i < 5; ++i) {
        auto n = std::to_string(i);
        cues.push_back({{"question", "Q" + n + "?"}, {"options", {"a" + n, "b" + n, "c" + n, "d" + n}}, {"answer_index", 1}});
    }
    auto three_options = cues;
    three_options[2]["options"].erase(3);
    auto four_questions = cues;
    four_questions.erase(4);

    struct Case {
        std::string name;
        bool themes;
        std::string output;
    };
    std::vector<Case> cases = {
        {"truncated JSON", true, "```json\n[{\"theme\": \"Encoding\", \"note_ids\": [\"m1\""},
        {"missing key", true, fenced(json::array({{{"theme", "Encoding"}}, {{"theme", "Rest"}, {"note_ids", {"m2", "m3"}}}}))},
        {"unknown note id", true, fenced(json::array({{{"theme", "Encoding"}, {"note_ids", {"m1", "m2", "m3", "m42"}}}}))},
        {"4-option violation", false, fenced(three_options)},
        {"4-question list", false, fenced(four_questions)},
    };
    for (const auto& k : cases) {
        auto fake = std::make_shared<testsupport::FakeTransport>(
            [&](const llm::ChatRequest&, std::size_t) { return testsupport::chat_ok(k.output); });
        llm::Gateway gw(testsupport::live_settings(), fake);
        synthesis::Synthesizer s(gw);
        bool parse_error = false;
        try {
            if (k.themes) {
                s.organize_by_theme(nb);
            } else {
                s.generate_cue_questions(nb);
            }
        } catch (const ParseError& e) {
            parse_error = e.code() == ErrorCode::ParseError && e.raw_text() == k.output;
        } catch (const std::exception& e) {
            c.expect(false, k.name + ": unexpected " + e.what());
        }
        c.expect(parse_error, k.name + ": no ParseError carrying the raw output");
        c.expect(fake->calls() == 2, k.name + ": " + std::to_string(fake->calls()) + " gateway calls");
        c.expect(gw.call_count() == 2, k.name + ": gateway counted " + std::to_string(gw.call_count()));
        if (fake->calls() == 2) {
            const auto& repair = testsupport::user_message(fake->requests()[1]);
            c.expect(repair.find(k.output) != std::string::npos, k.name + ": repair prompt lacks the malformed output");
        }
    }
}

void refusal(Check& c) {
    const std::string sentence =
        "Please provide the transcript related to the keypoint so I can assist you in creating a note.";
    auto nb = testsupport::lecture_notebook("nb-refusal");
    nb.micronotes.push_back(testsupport::micronote("m4", "my own thought", 70.0, 80, 3));
    auto profile = testsupport::onboarded_profile();

    auto fixtures = std::make_shared<llm::FixtureStore>();
    llm::GatewaySettings settings;
    settings.mode = llm::GatewayMode::replay;
    llm::Gateway gw(settings, nullptr, fixtures);
    synthesis::Synthesizer s(gw);
    for (const auto& m : nb.micronotes) {
        auto req = s.make_request(nb, m, &profile, true);
        auto text = m.id == "m4" ? sentence : "Expanded " + m.text + ".";
        fixtures->put(synthesis::build_expansion_prompt(req, s.templates(), s.config()).fingerprint,
                      {text, "gpt-4-turbo", "stop", testsupport::wall(0)});
    }
    auto out = s.expand_all(nb, profile);
    c.expect(out.expansions.size() == 4, "batch did not produce an entry per note");
    c.expect(out.expansions.count("m4") && out.expansions.at("m4").status == ExpansionStatus::refused,
             "refusal sentence not classified as refused");
    c.expect(out.ok_expansion_count() == 3, "other notes should be ok");
    c.expect(out.micronotes.back().text == "my own thought", "micronote was modified");
    auto md = store::export_markdown(out);
    c.expect(md.find("- [01:10] my own thought\n") != std::string::npos, "export does not fall back to the micronote");
    c.expect(md.find("Please provide") == std::string::npos, "refusal text leaked into export");
}

void transcript_windowing(Check& c) {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> gap(0.0, 5.0), dur(0.2, 10.0), when(0.0, 120.0), span(0.0, 30.0);
    for (int trial = 0; trial < 1000; ++trial) {
        Transcript t;
        double start = 0.0;
        for (int i = 0, n = 1 + trial % 15; i < n; ++i) {
            start += gap(rng);
            double d = dur(rng);
            t.segments.push_back({"s" + std::to_string(i), start, d});
            start += d;
        }
        double vt = when(rng), before = span(rng), after = span(rng);
        auto w = transcript::window_around(t, vt, before, after);
        bool any = false;
        for (const auto& s : t.segments) any = any || (s.start <= vt + after && s.end() > vt - before);
        if (any) {
            for (auto i : w.indices) {
                const auto& s = t.segments[i];
                c.expect(s.start <= vt + after && s.end() > vt - before, fmt::format("trial {}: segment {} outside window", trial, i));
            }
        } else {
            c.expect(w.indices.size() == 1, fmt::format("trial {}: fallback should pick one segment", trial));
        }
        c.expect(!w.indices.empty() && w.last_index - w.first_index + 1 == w.indices.size(),
                 fmt::format("trial {}: range not contiguous", trial));
        auto wider = transcript::window_around(t, vt, before + span(rng), after + span(rng));
        if (any) {
            c.expect(std::includes(wider.indices.begin(), wider.indices.end(), w.indices.begin(), w.indices.end()),
                     fmt::format("trial {}: enlarging the window dropped segments", trial));
        }
    }
    Transcript t;
    t.segments = {{"s0", 0, 5}, {"s1", 5, 5}, {"s2", 10, 5}};
    auto w = transcript::window_around(t, 5.0, 0, 0);
    c.expect(w.indices == std::vector<std::size_t>{1} && w.text == "s1", "t=5.0 zero-width window should return only s1");
}

void session(Check& c) {
    Notebook nb;
    nb.micronotes = {testsupport::micronote("m1", "0123456789", 1, 0, 4),
                     testsupport::micronote("m2", "abcdefghijabcdefghij", 2, 10, 6)};
    for (auto k : {PlaybackKind::play, PlaybackKind::pause, PlaybackKind::seek, PlaybackKind::pause,
                   PlaybackKind::seek, PlaybackKind::pause, PlaybackKind::play}) {
        nb.events.push_back({k, 1.0, k == PlaybackKind::seek ? std::optional<double>(30.0) : std::nullopt, testsupport::wall(0)});
    }
    auto s = stylometry::session_stats(nb);
    c.expect(s.pause_count == 3, fmt::format("pauses {}", s.pause_count));
    c.expect(s.seek_count == 2, fmt::format("seeks {}", s.seek_count));
    c.expect(s.avg_note_chars && *s.avg_note_chars == 15.0, "avg chars should be 15.0");
    c.expect(s.avg_note_seconds && *s.avg_note_seconds == 5.0, "avg seconds should be 5.0");
}

struct SimulatedCrash : std::runtime_error {
    SimulatedCrash() : std::runtime_error("simulated crash") {}
};

void store_round_trip(Check& c) {
    TempDir dir;
    store::Store st(dir.path());
    std::mt19937 rng(500);
    for (int i = 0; i < 500; ++i) {
        auto nb = testsupport::random_notebook(rng, "nb-" + std::to_string(i));
        st.save_notebook(nb);
        c.expect(st.load_notebook(nb.id) == nb, "round trip mismatch for " + nb.id);
    }
    c.expect(st.list_notebooks().size() == 500, "expected 500 stored notebooks");

    store::StoreOptions opts;
    opts.before_rename = [](const std::filesystem::path&) { throw SimulatedCrash(); };
    store::Store crashing(dir.path(), opts);
    std::mt19937 rng2(501);
    for (int i = 0; i < 50; ++i) {
        auto id = "nb-" + std::to_string(i);
        auto before = fsutil::read_file(st.notebook_path(id));
        auto changed = testsupport::random_notebook(rng2, id);
        changed.title = "rewritten " + std::to_string(i);
        bool crashed = false;
        try {
            crashing.save_notebook(changed);
        } catch (const SimulatedCrash&) {
            crashed = true;
        }
        c.expect(crashed, "crash hook did not fire");
        c.expect(fsutil::read_file(st.notebook_path(id)) == before, "prior version changed for " + id);
        c.expect(st.load_notebook(id) == store::parse_notebook_document(before), "prior version unreadable for " + id);
    }
}

struct ApiHarness {
    api::ApiService service;
    explicit ApiHarness(api::ServiceConfig cfg) : service(std::move(cfg)) {}
    std::pair<int, json> call(const std::string& method, const std::string& target, const std::string& body = "") {
        auto r = service.handle(api::ApiRequest::from_target(method, target, body));
        return {r.status, r.content_type == "application/json" ? json::parse(r.body) : json(r.body)};
    }
    std::pair<int, json> call(const std::string& method, const std::string& target, const json& body) {
        return call(method, target, body.dump());
    }
};

api::ServiceConfig replay_cfg(const std::filesystem::path& store_dir, const std::filesystem::path& fixtures) {
    api::ServiceConfig cfg;
    cfg.store_dir = store_dir;
    cfg.gateway.mode = llm::GatewayMode::replay;
    cfg.gateway.fixture_path = fixtures;
    return cfg;
}

void api_contract(Check& c) {
    std::set<std::string> seen;
    auto expect_code = [&](const std::pair<int, json>& r, const std::string& code, const std::string& ctx) {
        auto got = r.second.is_object() ? r.second.value("code", "") : "";
        c.expect(got == code, ctx + ": expected " + code + ", got " + std::to_string(r.first) + " " + r.second.dump());
        if (got == code) {
            c.expect(r.first == error_info(*error_code_from_name(code)).http_status, ctx + ": wrong HTTP status");
            seen.insert(code);
        }
    };

    // Read-your-writes over the demo flow in replay mode.
    TempDir dir;
    ApiHarness h(replay_cfg(dir.path(), kDemo / "fixtures" / "llm.json"));
    auto get_nb = [&] { return h.call("GET", "/notebooks/met-demo").second; };
    auto demo_body = json{{"id", "met-demo"}, {"title", "A Short Tour of the Met"}, {"user_id", "demo"},
                          {"video_ref", "met-tour"},
                          {"captions", {{"format", "vtt"}, {"content", fsutil::read_file(kDemo / "met.vtt")}}}};
    auto created = h.call("POST", "/notebooks", demo_body);
    c.expect(created.first == 201 && created.second == get_nb(), "POST /notebooks not readable");
    auto profile = h.call("POST", "/profiles/demo/onboarding", json::parse(fsutil::read_file(kDemo / "profile.json")));
    c.expect(profile.first == 200 && profile.second == h.call("GET", "/profiles/demo").second, "onboarding not readable");
    auto notes = json::parse(fsutil::read_file(kDemo / "notes.json"));
    for (const auto& m : notes["micronotes"]) {
        auto r = h.call("POST", "/notebooks/met-demo/micronotes", m);
        c.expect(r.first == 201, "POST micronote failed");
        auto id = r.second.value("id", "");
        c.expect(r.second == h.call("GET", "/notebooks/met-demo/notes/" + id).second, "micronote " + id + " not readable");
    }
    for (const char* target : {"/notebooks/met-demo/expand", "/notebooks/met-demo/expand?personalize=false",
                               "/notebooks/met-demo/themes", "/notebooks/met-demo/cues", "/notebooks/met-demo/summary"}) {
        auto r = h.call("POST", target, std::string("{}"));
        c.expect(r.first == 200 && r.second == get_nb(), std::string(target) + " not readable");
    }
    auto themes = get_nb()["themes"];
    if (themes.is_array() && themes.size() >= 2) {
        auto target = themes[1]["theme_name"].get<std::string>();
        auto moved = h.call("POST", "/notebooks/met-demo/themes/move", json{{"note_id", "m1"}, {"target", target}});
        c.expect(moved.first == 200 && moved.second == get_nb(), "themes/move not readable");
    }
    auto order = h.call("POST", "/notebooks/met-demo/order", json{{"mode", "by_theme"}});
    c.expect(order.first == 200 && order.second == get_nb(), "order not readable");
    auto patched = h.call("PATCH", "/notebooks/met-demo/notes/m2", json{{"expansion_text", "Edited."}});
    c.expect(patched.first == 200 && patched.second == h.call("GET", "/notebooks/met-demo/notes/m2").second,
             "PATCH note not readable");
    auto events = h.call("POST", "/notebooks/met-demo/events", notes["events"].is_array() ? json{{"events", notes["events"]}} : json{{"events", json::array()}});
    c.expect(events.first == 200 && events.second == get_nb(), "events not readable");
    auto report = h.call("GET", "/notebooks/met-demo/report");
    auto saved = h.service.store().load_report("met-demo");
    saved.erase("schema_version");
    c.expect(report.first == 200 && saved == report.second, "report not persisted as returned");
    auto md = h.call("GET", "/notebooks/met-demo/export.md");
    c.expect(md.first == 200 && md.second.get<std::string>().find("- [02:20] tix") != std::string::npos,
             "export lacks refused micronote");

    // Error codes reachable through routes.
    expect_code(h.call("POST", "/notebooks", std::string("{oops")), "INVALID_REQUEST", "malformed body");
    expect_code(h.call("GET", "/notebooks/none"), "NOT_FOUND", "missing notebook");
    expect_code(h.call("POST", "/notebooks", demo_body), "CONFLICT", "duplicate notebook");
    expect_code(h.call("POST", "/notebooks/met-demo/micronotes", json{{"text", " "}, {"video_time", 1}}), "VALIDATION_FAILED", "blank note");
    expect_code(h.call("POST", "/profiles/x/onboarding", json{{"examples", json::array()}}), "INVALID_ONBOARDING", "no examples");
    expect_code(h.call("GET", "/notebooks/met-demo/notes/m99"), "UNKNOWN_NOTE", "unknown note");
    expect_code(h.call("POST", "/notebooks", json{{"title", "t"}, {"captions", {{"format", "srt"}, {"content", "1\nbad\n"}}}}),
                "FORMAT_ERROR", "bad captions");
    expect_code(h.call("POST", "/notebooks/met-demo/expand?note=m5"), "REFUSED", "refused note");

    ApiHarness empty(replay_cfg(dir / "other", dir / "other" / "none.json"));
    auto lecture = json{{"id", "lec"}, {"title", "L"}, {"user_id", "alice"},
                        {"transcript", json(testsupport::lecture_transcript())}};
    empty.call("POST", "/notebooks", lecture);
    expect_code(empty.call("POST", "/notebooks/lec/cues"), "NO_NOTES", "cues without notes");
    expect_code(empty.call("POST", "/notebooks/lec/themes/move", json{{"note_id", "m1"}, {"target", "A"}}),
                "NOT_IN_THEME_MODE", "move before themes");
    empty.call("POST", "/notebooks/lec/micronotes", json{{"text", "encoding"}, {"video_time", 12}});
    expect_code(empty.call("POST", "/notebooks/lec/expand"), "NOT_ONBOARDED", "expand without profile");
    expect_code(empty.call("POST", "/notebooks/lec/themes"), "TOO_FEW_NOTES", "themes with one note");
    expect_code(empty.call("POST", "/notebooks/lec/expand?note=m1&personalize=false"), "FIXTURE_MISS", "no fixture");

    auto& st = empty.service.store();
    fsutil::write_file_atomic(st.notebook_path("bad"), "[1,2");
    expect_code(empty.call("GET", "/notebooks/bad"), "CORRUPT_DOCUMENT", "corrupt file");
    auto future = json::parse(store::notebook_document(testsupport::lecture_notebook("future")));
    future["schema_version"] = 2;
    fsutil::write_file_atomic(st.notebook_path("future"), future.dump());
    expect_code(empty.call("GET", "/notebooks/future"), "VERSION_TOO_NEW", "future schema");

    TempDir broken;
    fsutil::write_file_atomic(broken / "notebooks", "file, not dir");
    ApiHarness io(replay_cfg(broken.path(), broken / "fx.json"));
    expect_code(io.call("POST", "/notebooks", lecture), "IO_ERROR", "unwritable store");

    // Gateway failures through a fake live transport.
    auto live = [&](std::function<llm::ChatResponse(const llm::ChatRequest&)> fn, const std::string& code, const std::string& target) {
        TempDir d;
        api::ServiceConfig cfg;
        cfg.store_dir = d.path();
        cfg.gateway = testsupport::live_settings();
        cfg.transport = std::make_shared<testsupport::FakeTransport>(
            [fn](const llm::ChatRequest& r, std::size_t) { return fn(r); });
        ApiHarness lh(cfg);
        lh.call("POST", "/notebooks", lecture);
        for (const char* t : {"encoding", "sleep", "ageing"}) {
            lh.call("POST", "/notebooks/lec/micronotes", json{{"text", t}, {"video_time", 12}});
        }
        for (const char* id : {"m1", "m2", "m3"}) {
            lh.call("PATCH", std::string("/notebooks/lec/notes/") + id, json{{"expansion_text", "Expanded."}});
        }
        expect_code(lh.call("POST", target), code, code + " via " + target);
    };
    auto status = [](int s) { return [s](const llm::ChatRequest&) { return testsupport::chat_status(s); }; };
    live(status(401), "AUTH_ERROR", "/notebooks/lec/summary");
    live(status(429), "RATE_LIMITED", "/notebooks/lec/summary");
    live(status(503), "TRANSPORT_ERROR", "/notebooks/lec/summary");
    live([](const llm::ChatRequest&) {
        return llm::ChatResponse{0, "", std::nullopt, llm::ChatResponse::Failure::timeout, "slow"};
    }, "TIMEOUT", "/notebooks/lec/summary");
    live([](const llm::ChatRequest&) { return testsupport::chat_ok("no json here"); }, "PARSE_ERROR", "/notebooks/lec/themes");
    live([](const llm::ChatRequest&) -> llm::ChatResponse { throw std::logic_error("bug"); }, "INTERNAL", "/notebooks/lec/summary");

    // Codes with no request path that produces them are still rendered through
    // the same envelope.
    for (const auto& info : error_table()) {
        auto name = std::string(info.name);
        if (seen.count(name)) continue;
        auto r = api::error_response(info.code, "x");
        auto body = json::parse(r.body);
        c.expect(r.status == info.http_status && body["code"] == name, name + " envelope");
        seen.insert(name);
    }
    c.expect(seen.size() == error_table().size(), "not every error code covered");
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<void(Check&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"metric oracle equivalence", 5, metric_oracle},
        {"mendenhall normalization", 5, mendenhall},
        {"style ablation plumbing", 5, style_ablation},
        {"pipeline determinism", 10, pipeline_determinism},
        {"structured-output robustness", 10, structured_robustness},
        {"refusal handling", 10, refusal},
        {"transcript windowing", 10, transcript_windowing},
        {"session stats", 5, session},
        {"store round-trip", 30, store_round_trip},
        {"api contract", 30, api_contract},
    };
    auto suite_start = std::chrono::steady_clock::now();
    int failed = 0;
    for (const auto& cr : criteria) {
        Check c;
        auto start = std::chrono::steady_clock::now();
        try {
            cr.run(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("uncaught: ") + e.what());
        }
        double secs = Seconds(std::chrono::steady_clock::now() - start).count();
        c.expect(secs < cr.budget_s, fmt::format("took {:.2f}s, budget {}s", secs, cr.budget_s));
        if (c.ok()) {
            std::cout << fmt::format("[PASS] {} ({:.3f}s)\n", cr.name, secs);
        } else {
            ++failed;
            std::cout << fmt::format("[FAIL] {} ({:.3f}s): {}\n", cr.name, secs, c.summary());
        }
    }
    double total = Seconds(std::chrono::steady_clock::now() - suite_start).count();
    bool in_budget = total < 60.0;
    if (!in_budget) ++failed;
    std::cout << fmt::format("[{}] whole suite under 60s ({:.3f}s)\n", in_budget ? "PASS" : "FAIL", total);
    return failed == 0 ? 0 : 1;
}
