#pragma once
// Chat-completion client for OpenAI-compatible endpoints.
//
// Three modes:
//   live    every call goes to the endpoint
//   record  fixture hits are replayed, misses go live and are written back
//   replay  fixture hits only; a miss is a FixtureMiss error
//
// Fixtures are keyed by the prompt fingerprint, so any change to the rendered
// prompt or to the generation parameters produces a new key.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "noteeline/model.hpp"

namespace noteeline::llm {

using json = nlohmann::json;

struct GenerationConfig {
    std::string model_id = "gpt-4-turbo";
    double temperature = 0.5;
    std::int64_t seed = 1;
    int max_output_tokens = 1024;
    double timeout_seconds = 60.0;

    void validate() const;  // throws Error(ValidationFailed)
};

// SHA-256 over the canonical JSON of the prompt text and every generation
// parameter that can change model output (timeout excluded).
std::string compute_fingerprint(std::string_view system, std::string_view user, const GenerationConfig& cfg);

struct PromptBundle {
    std::string system;
    std::string user;
    std::string fingerprint;

    static PromptBundle make(std::string system, std::string user, const GenerationConfig& cfg);
    bool fingerprint_matches(const GenerationConfig& cfg) const;
};

struct CompletionResult {
    std::string text;
    double latency = 0.0;  // seconds, includes retries
    std::string model_id;
    std::string finish_reason;
    WallTime created_wall;
};

enum class GatewayMode { live, record, replay };

std::string_view to_string(GatewayMode m);
GatewayMode gateway_mode_from(std::string_view s);  // throws Error(InvalidRequest)

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.5;
    std::int64_t seed = 1;
    int max_tokens = 1024;
    double timeout_seconds = 60.0;

    json to_wire() const;
};

struct ChatResponse {
    enum class Failure { none, timeout, connection };

    int status = 0;
    std::string body;
    std::optional<double> retry_after;
    Failure failure = Failure::none;
    std::string failure_detail;
};

class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual ChatResponse send(const ChatRequest& request) = 0;
};

// base_url like "https://api.openai.com/v1"; requests go to <base_url>/chat/completions.
std::shared_ptr<ChatTransport> make_http_transport(const std::string& base_url, const std::string& api_key);

struct FixtureEntry {
    std::string text;
    std::string model_id;
    std::string finish_reason;
    WallTime recorded_wall;
};

// Content-addressed map fingerprint -> recorded completion, persisted as a
// single JSON document. All access is serialized.
class FixtureStore {
public:
    FixtureStore() = default;
    explicit FixtureStore(std::filesystem::path path);

    std::optional<FixtureEntry> find(const std::string& fingerprint) const;
    // Inserts if absent and persists when file-backed. Returns false if the
    // fingerprint was already present (existing entry is kept).
    bool put(const std::string& fingerprint, const FixtureEntry& entry);
    std::size_t size() const;
    json to_json() const;
    const std::optional<std::filesystem::path>& path() const { return path_; }

private:
    void save_locked() const;

    mutable std::mutex mu_;
    std::optional<std::filesystem::path> path_;
    std::map<std::string, FixtureEntry> entries_;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;
EnvLookup process_env();

struct GatewaySettings {
    GatewayMode mode = GatewayMode::live;
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    std::filesystem::path fixture_path;
    int max_concurrency = 4;
    std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(1000),
                                                   std::chrono::milliseconds(2000)};
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
    std::function<WallTime()> clock;                        // defaults to WallTime::now

    // NOTEELINE_LLM_MODE, NOTEELINE_LLM_BASE_URL, NOTEELINE_LLM_API_KEY,
    // NOTEELINE_LLM_FIXTURES (defaults to default_fixture_path).
    static GatewaySettings from_env(const EnvLookup& env, std::filesystem::path default_fixture_path);
};

class Gateway {
public:
    // A null transport means "build an HTTP transport from settings on first live call".
    explicit Gateway(GatewaySettings settings, std::shared_ptr<ChatTransport> transport = nullptr,
                     std::shared_ptr<FixtureStore> fixtures = nullptr);

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    // Throws GatewayError (AuthError, RateLimited, Timeout, TransportError, FixtureMiss).
    CompletionResult complete(const PromptBundle& bundle, const GenerationConfig& cfg);

    std::size_t call_count() const;
    GatewayMode mode() const { return settings_.mode; }
    const GatewaySettings& settings() const { return settings_; }
    bool has_credentials() const { return !settings_.api_key.empty(); }
    FixtureStore& fixtures() { return *fixtures_; }

private:
    CompletionResult complete_live(const PromptBundle& bundle, const GenerationConfig& cfg);
    ChatTransport& transport();

    GatewaySettings settings_;
    std::shared_ptr<ChatTransport> transport_;
    std::shared_ptr<FixtureStore> fixtures_;
    std::counting_semaphore<1024> in_flight_;
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
};

struct RefusalPatterns {
    std::vector<std::string> prefixes{"please provide", "i cannot", "i'm sorry", "i\xE2\x80\x99m sorry"};
    std::vector<std::string> substrings{"provide the transcript"};
};

// True for empty output or a response that asks for more input instead of
// producing a note. Matching is case-insensitive.
bool detect_refusal(std::string_view text, const RefusalPatterns& patterns = {});

}  // namespace noteeline::llm
