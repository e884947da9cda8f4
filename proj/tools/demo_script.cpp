#include "demo_script.hpp"

#include <sstream>

#include "noteeline/cli.hpp"
#include "noteeline/errors.hpp"
#include "noteeline/fsutil.hpp"

namespace noteeline::demo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool contains(const std::string& s, std::string_view needle) { return s.find(needle) != std::string::npos; }

llm::ChatResponse reply(const std::string& model, const std::string& content) {
    json body{{"model", model},
              {"choices", json::array({{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", content}}},
                                        {"finish_reason", "stop"}}})}};
    return {200, body.dump(), std::nullopt, llm::ChatResponse::Failure::none, {}};
}

std::string lookup(const json& script, const char* section, const std::string& key) {
    auto s = script.find(section);
    if (s == script.end() || !s->is_object()) return {};
    auto it = s->find(key);
    return it != s->end() && it->is_string() ? it->get<std::string>() : std::string{};
}

}  // namespace

ScriptedTransport::ScriptedTransport(json script) : script_(std::move(script)) {}

std::shared_ptr<ScriptedTransport> ScriptedTransport::from_file(const fs::path& path) {
    return std::make_shared<ScriptedTransport>(json::parse(fsutil::read_file(path)));
}

llm::ChatResponse ScriptedTransport::send(const llm::ChatRequest& request) {
    const std::string user = request.messages.empty() ? std::string{} : request.messages.back().content;
    const std::string model = script_.value("model", request.model);
    std::string answer;

    static constexpr std::string_view kKeypoint = "Keypoint: ";
    static constexpr std::string_view kFullNote = "\nFull note:";
    if (contains(user, "Your previous answer could not be used")) {
        answer.clear();
    } else if (auto end = user.rfind(kFullNote); end != std::string::npos && contains(user, kKeypoint)) {
        auto start = user.rfind(kKeypoint, end) + kKeypoint.size();
        auto keypoint = user.substr(start, end - start);
        bool personalized = !contains(user, "(no examples)");
        answer = lookup(script_, personalized ? "expansions" : "ablation", keypoint);
    } else if (contains(user, "Question set:")) {
        answer = script_.value("cues", std::string{});
    } else if (contains(user, "\nSummary:")) {
        answer = script_.value("summary", std::string{});
    } else if (contains(user, "\nAnswer:")) {
        answer = script_.value("themes", std::string{});
    }

    if (answer.empty()) {
        std::lock_guard lock(mu_);
        unanswered_.push_back(user);
        return {500, R"({"error":"no scripted answer"})", std::nullopt, llm::ChatResponse::Failure::none, {}};
    }
    return reply(model, answer);
}

std::vector<std::string> ScriptedTransport::unanswered() const {
    std::lock_guard lock(mu_);
    return unanswered_;
}

WallTime demo_clock() { return WallTime::from_iso8601("2024-03-01T10:00:00.000Z"); }

std::vector<std::vector<std::string>> demo_pipeline(const fs::path& demo_dir) {
    auto p = [&](const char* name) { return (demo_dir / name).string(); };
    return {
        {"ingest", p("met.vtt"), "--id", "met-demo", "--title", "A Short Tour of the Met", "--user", "demo",
         "--video-ref", "met-tour", "--notes", p("notes.json")},
        {"onboard", "demo", "--examples", p("profile.json")},
        {"expand", "met-demo"},
        {"expand", "met-demo", "--no-personalization"},
        {"themes", "met-demo"},
        {"cues", "met-demo"},
        {"summary", "met-demo"},
        {"eval", "met-demo", "--handwritten", p("handwritten.txt")},
        {"export", "met-demo"},
    };
}

std::string record_demo_fixtures(const fs::path& demo_dir, const fs::path& scratch) {
    fs::remove_all(scratch);
    auto fixture = scratch / "fixtures" / "llm.json";
    auto transport = ScriptedTransport::from_file(demo_dir / "script.json");
    cli::CliContext ctx;
    ctx.transport = transport;
    ctx.clock = demo_clock;
    ctx.env = [fixture](std::string_view name) -> std::optional<std::string> {
        if (name == "NOTEELINE_LLM_MODE") return "record";
        if (name == "NOTEELINE_LLM_FIXTURES") return fixture.string();
        return std::nullopt;
    };
    for (auto args : demo_pipeline(demo_dir)) {
        args.insert(args.begin(), {"--store", scratch.string()});
        std::ostringstream out, err;
        int code = cli::run_cli(args, out, err, ctx);
        if (code != 0) throw Error(ErrorCode::Internal, "demo step '" + args[2] + "' failed: " + err.str());
    }
    if (!transport->unanswered().empty()) {
        throw Error(ErrorCode::Internal, "script has no answer for prompt:\n" + transport->unanswered().front());
    }
    return fsutil::read_file(fixture);
}

}  // namespace noteeline::demo
