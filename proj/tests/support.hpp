#pragma once
// Shared fixtures for the test binaries.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "noteeline/llm_gateway.hpp"
#include "noteeline/model.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(NOTEELINE_SOURCE_DIR); }

class TempDir {
public:
    TempDir() {
        auto tmpl = (fs::temp_directory_path() / "noteeline-test-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

inline noteeline::llm::ChatResponse chat_ok(const std::string& content, const std::string& model = "gpt-4-turbo") {
    nlohmann::json body{{"model", model},
                        {"choices", nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", content}}},
                                                            {"finish_reason", "stop"}}})}};
    return {200, body.dump(), std::nullopt, noteeline::llm::ChatResponse::Failure::none, {}};
}

inline noteeline::llm::ChatResponse chat_status(int status) {
    return {status, "{}", std::nullopt, noteeline::llm::ChatResponse::Failure::none, {}};
}

// Transport driven by a callback; records every request.
class FakeTransport : public noteeline::llm::ChatTransport {
public:
    using Handler = std::function<noteeline::llm::ChatResponse(const noteeline::llm::ChatRequest&, std::size_t)>;

    explicit FakeTransport(Handler h) : handler_(std::move(h)) {}

    noteeline::llm::ChatResponse send(const noteeline::llm::ChatRequest& req) override {
        std::size_t n;
        {
            std::lock_guard lock(mu_);
            requests_.push_back(req);
            n = requests_.size() - 1;
        }
        return handler_(req, n);
    }

    std::size_t calls() const {
        std::lock_guard lock(mu_);
        return requests_.size();
    }
    std::vector<noteeline::llm::ChatRequest> requests() const {
        std::lock_guard lock(mu_);
        return requests_;
    }

private:
    Handler handler_;
    mutable std::mutex mu_;
    std::vector<noteeline::llm::ChatRequest> requests_;
};

inline const std::string& user_message(const noteeline::llm::ChatRequest& r) { return r.messages.back().content; }

inline noteeline::llm::GatewaySettings live_settings() {
    noteeline::llm::GatewaySettings s;
    s.mode = noteeline::llm::GatewayMode::live;
    s.api_key = "test-key";
    s.sleep = [](std::chrono::milliseconds) {};
    return s;
}

inline noteeline::WallTime wall(std::int64_t seconds) { return noteeline::WallTime{1'700'000'000'000 + seconds * 1000}; }

inline noteeline::Micronote micronote(std::string id, std::string text, double video_time, std::int64_t start = 0,
                                      std::int64_t seconds = 5) {
    noteeline::Micronote m;
    m.id = std::move(id);
    m.text = std::move(text);
    m.video_time = video_time;
    m.created_wall = wall(start);
    m.finished_wall = wall(start + seconds);
    return m;
}

// Transcript of consecutive 10 s segments.
inline noteeline::Transcript lecture_transcript() {
    noteeline::Transcript t;
    t.video_ref = "lecture";
    const char* lines[] = {
        "Memory begins when an experience is encoded by the brain.",
        "Encoding turns sights and sounds into electrical and chemical signals.",
        "Those signals are consolidated during sleep into long term memory.",
        "Memories that are never recalled slowly fade over time.",
        "Recalling a memory makes the trace stronger each time.",
        "Ageing and poor health can weaken how well we remember.",
        "Regular exercise and sleep help to preserve memory.",
        "Writing things down is another simple memory strategy.",
    };
    double start = 0.0;
    for (const char* line : lines) {
        t.segments.push_back({line, start, 10.0});
        start += 10.0;
    }
    return t;
}

inline noteeline::Notebook lecture_notebook(std::string id = "nb-lecture") {
    noteeline::Notebook nb;
    nb.id = std::move(id);
    nb.title = "Memory lecture";
    nb.user_id = "alice";
    nb.transcript = lecture_transcript();
    nb.micronotes = {micronote("m1", "encoding = signals", 12.0, 12, 4),
                     micronote("m2", "sleep consolidates", 25.0, 26, 6),
                     micronote("m3", "ageing weakens mem", 55.0, 56, 5)};
    return nb;
}

inline noteeline::UserProfile onboarded_profile(std::string user = "alice") {
    noteeline::UserProfile p;
    p.user_id = std::move(user);
    for (int i = 1; i <= 3; ++i) {
        auto n = std::to_string(i);
        p.examples.push_back({"clip-" + n, "Transcript excerpt number " + n + " about rivers.",
                              "rivers pt " + n, "Rivers carry sediment downstream, part " + n + "."});
    }
    return p;
}

// Valid notebook with every optional part exercised at random.
inline noteeline::Notebook random_notebook(std::mt19937& rng, std::string id) {
    using namespace noteeline;
    static const std::vector<std::string> words = {"met",   "caf\xC3\xA9", "RNN",      "l\xE2\x86\x92r", "x\"y",
                                                   "a\\b",  "tab\there",   "line\nbrk", "\xF0\x9F\x93\x9D",
                                                   "20%",   "don't",       "<b>",       "ok"};
    std::uniform_int_distribution<std::size_t> word(0, words.size() - 1);
    std::uniform_int_distribution<int> small(0, 6);
    std::uniform_real_distribution<double> t(0.0, 3600.0);
    std::bernoulli_distribution coin(0.5);
    auto phrase = [&](int n) {
        std::string s = words[word(rng)];
        for (int i = 1; i < n; ++i) s += " " + words[word(rng)];
        return s;
    };

    Notebook nb;
    nb.id = std::move(id);
    nb.title = phrase(3);
    nb.user_id = coin(rng) ? "user_" + std::to_string(small(rng)) : "";
    double start = 0.0;
    for (int i = 0, n = small(rng); i < n; ++i) {
        start += t(rng) / 100.0;
        nb.transcript.segments.push_back({phrase(4), start, 0.25 + t(rng) / 1000.0});
    }
    if (coin(rng)) nb.transcript.video_ref = "video-" + std::to_string(small(rng));
    for (int i = 0, n = 1 + small(rng); i < n; ++i) {
        auto m = micronote("m" + std::to_string(i + 1), phrase(1 + small(rng)), t(rng), small(rng) * 7, small(rng));
        nb.micronotes.push_back(m);
        switch (small(rng) % 4) {
            case 0: break;
            case 1: nb.expansions[m.id] = {m.id, phrase(8), "gpt-4-turbo", std::string(64, 'a'), wall(1), ExpansionStatus::ok, std::nullopt}; break;
            case 2: nb.expansions[m.id] = {m.id, "Please provide the transcript", "gpt-4-turbo", "fp", wall(2), ExpansionStatus::refused, std::nullopt}; break;
            default:
                nb.expansions[m.id] = {m.id, "", "gpt-4-turbo", "fp", wall(3), ExpansionStatus::failed,
                                       ExpansionFailure{"TIMEOUT", "after 3 attempts"}};
        }
        if (coin(rng)) nb.ablation_expansions[m.id] = {m.id, phrase(5), "gpt-4-turbo", "fp2", wall(4), ExpansionStatus::ok, std::nullopt};
    }
    if (coin(rng)) {
        std::vector<ThemeAssignment> themes;
        for (const auto& m : nb.micronotes) {
            if (themes.empty() || coin(rng)) themes.push_back({"Theme " + std::to_string(themes.size()) + " " + phrase(1), {}});
            themes.back().note_ids.push_back(m.id);
        }
        nb.themes = themes;
        if (coin(rng)) nb.ordering_mode = OrderingMode::by_theme;
    }
    if (coin(rng)) {
        std::vector<CueQuestion> qs;
        for (int q = 0; q < 5; ++q) {
            auto n = std::to_string(q);
            qs.push_back({phrase(4) + "?" + n, {"A" + n, "B" + n, "C" + n, phrase(2) + "D" + n}, small(rng) % 4});
        }
        nb.cue_questions = qs;
        nb.cue_generation = small(rng);
    }
    if (coin(rng)) nb.summary = phrase(20);
    if (coin(rng)) nb.reference_notes = phrase(12);
    for (int i = 0, n = small(rng); i < n; ++i) {
        auto kind = static_cast<PlaybackKind>(small(rng) % 4);
        std::optional<double> target;
        if (kind == PlaybackKind::seek) target = t(rng);
        nb.events.push_back({kind, t(rng), target, wall(small(rng))});
    }
    return nb;
}

}  // namespace testsupport
