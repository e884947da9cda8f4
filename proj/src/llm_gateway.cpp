#include "noteeline/llm_gateway.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "noteeline/errors.hpp"
#include "noteeline/fsutil.hpp"
#include "noteeline/hash.hpp"
#include "noteeline/model_json.hpp"
#include "noteeline/text.hpp"

namespace noteeline::llm {

void GenerationConfig::validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw Error(ErrorCode::ValidationFailed, "temperature must be in [0,2]");
    }
    if (max_output_tokens <= 0) throw Error(ErrorCode::ValidationFailed, "max_output_tokens must be positive");
    if (!(timeout_seconds > 0)) throw Error(ErrorCode::ValidationFailed, "timeout must be positive");
    if (model_id.empty()) throw Error(ErrorCode::ValidationFailed, "model_id must be set");
}

std::string compute_fingerprint(std::string_view system, std::string_view user, const GenerationConfig& cfg) {
    json canon = {
        {"system", system},
        {"user", user},
        {"model_id", cfg.model_id},
        {"temperature", cfg.temperature},
        {"seed", cfg.seed},
        {"max_output_tokens", cfg.max_output_tokens},
    };
    return sha256_hex(canon.dump());
}

PromptBundle PromptBundle::make(std::string system, std::string user, const GenerationConfig& cfg) {
    if (text::is_blank(user)) throw Error(ErrorCode::ValidationFailed, "prompt user message is empty");
    auto fp = compute_fingerprint(system, user, cfg);
    return PromptBundle{std::move(system), std::move(user), std::move(fp)};
}

bool PromptBundle::fingerprint_matches(const GenerationConfig& cfg) const {
    return fingerprint == compute_fingerprint(system, user, cfg);
}

std::string_view to_string(GatewayMode m) {
    switch (m) {
        case GatewayMode::live: return "live";
        case GatewayMode::record: return "record";
        case GatewayMode::replay: return "replay";
    }
    return "live";
}

GatewayMode gateway_mode_from(std::string_view s) {
    if (s == "live") return GatewayMode::live;
    if (s == "record") return GatewayMode::record;
    if (s == "replay") return GatewayMode::replay;
    throw Error(ErrorCode::InvalidRequest, "NOTEELINE_LLM_MODE must be live, record or replay (got '" +
                                               std::string(s) + "')");
}

json ChatRequest::to_wire() const {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return json{{"model", model},
                {"messages", msgs},
                {"temperature", temperature},
                {"seed", seed},
                {"max_tokens", max_tokens}};
}

namespace {

class HttpChatTransport : public ChatTransport {
public:
    HttpChatTransport(const std::string& base_url, std::string api_key) : api_key_(std::move(api_key)) {
        // Split "scheme://host[:port]/prefix" into origin and path prefix.
        auto scheme_end = base_url.find("://");
        auto path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        if (path_start == std::string::npos) {
            origin_ = base_url;
        } else {
            origin_ = base_url.substr(0, path_start);
            prefix_ = base_url.substr(path_start);
        }
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }

    ChatResponse send(const ChatRequest& request) override {
        httplib::Client client(origin_);
        auto secs = static_cast<time_t>(request.timeout_seconds);
        auto usecs = static_cast<time_t>((request.timeout_seconds - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);

        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        ChatResponse out;
        auto res = client.Post(prefix_ + "/chat/completions", headers, request.to_wire().dump(), "application/json");
        if (!res) {
            auto err = res.error();
            out.failure = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                              ? ChatResponse::Failure::timeout
                              : ChatResponse::Failure::connection;
            out.failure_detail = httplib::to_string(err);
            return out;
        }
        out.status = res->status;
        out.body = res->body;
        if (res->has_header("Retry-After")) {
            char* end = nullptr;
            auto value = res->get_header_value("Retry-After");
            double secs_after = std::strtod(value.c_str(), &end);
            if (end != value.c_str()) out.retry_after = secs_after;
        }
        return out;
    }

private:
    std::string origin_;
    std::string prefix_;
    std::string api_key_;
};

FixtureEntry entry_from_json(const json& j) {
    FixtureEntry e;
    j.at("text").get_to(e.text);
    e.model_id = j.value("model_id", std::string{});
    e.finish_reason = j.value("finish_reason", std::string{});
    if (j.contains("recorded_wall")) j.at("recorded_wall").get_to(e.recorded_wall);
    return e;
}

json entry_to_json(const FixtureEntry& e) {
    return json{{"text", e.text},
                {"model_id", e.model_id},
                {"finish_reason", e.finish_reason},
                {"recorded_wall", e.recorded_wall}};
}

}  // namespace

std::shared_ptr<ChatTransport> make_http_transport(const std::string& base_url, const std::string& api_key) {
    return std::make_shared<HttpChatTransport>(base_url, api_key);
}

FixtureStore::FixtureStore(std::filesystem::path path) : path_(std::move(path)) {
    std::error_code ec;
    if (!std::filesystem::exists(*path_, ec)) return;
    auto raw = fsutil::read_file(*path_);
    try {
        auto doc = json::parse(raw);
        for (const auto& [fp, entry] : doc.at("entries").items()) entries_.emplace(fp, entry_from_json(entry));
    } catch (const json::exception& e) {
        throw ListError(ErrorCode::CorruptDocument, {"fixture store " + path_->string() + ": " + e.what()});
    }
}

std::optional<FixtureEntry> FixtureStore::find(const std::string& fingerprint) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(fingerprint);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

bool FixtureStore::put(const std::string& fingerprint, const FixtureEntry& entry) {
    std::lock_guard lock(mu_);
    if (!entries_.emplace(fingerprint, entry).second) return false;
    save_locked();
    return true;
}

std::size_t FixtureStore::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

json FixtureStore::to_json() const {
    std::lock_guard lock(mu_);
    json entries = json::object();
    for (const auto& [fp, e] : entries_) entries[fp] = entry_to_json(e);
    return json{{"schema_version", 1}, {"entries", entries}};
}

void FixtureStore::save_locked() const {
    if (!path_) return;
    json entries = json::object();
    for (const auto& [fp, e] : entries_) entries[fp] = entry_to_json(e);
    json doc{{"schema_version", 1}, {"entries", entries}};
    fsutil::write_file_atomic(*path_, canonical_dump(doc));
}

EnvLookup process_env() {
    return [](std::string_view name) -> std::optional<std::string> {
        const char* v = std::getenv(std::string(name).c_str());
        if (!v) return std::nullopt;
        return std::string(v);
    };
}

GatewaySettings GatewaySettings::from_env(const EnvLookup& env, std::filesystem::path default_fixture_path) {
    GatewaySettings s;
    if (auto mode = env("NOTEELINE_LLM_MODE"); mode && !mode->empty()) s.mode = gateway_mode_from(*mode);
    if (auto url = env("NOTEELINE_LLM_BASE_URL"); url && !url->empty()) s.base_url = *url;
    if (auto key = env("NOTEELINE_LLM_API_KEY")) s.api_key = *key;
    if (auto fx = env("NOTEELINE_LLM_FIXTURES"); fx && !fx->empty()) {
        s.fixture_path = *fx;
    } else {
        s.fixture_path = std::move(default_fixture_path);
    }
    if (auto conc = env("NOTEELINE_LLM_CONCURRENCY"); conc && !conc->empty()) {
        s.max_concurrency = std::max(1, std::atoi(conc->c_str()));
    }
    return s;
}

Gateway::Gateway(GatewaySettings settings, std::shared_ptr<ChatTransport> transport,
                 std::shared_ptr<FixtureStore> fixtures)
    : settings_(std::move(settings)),
      transport_(std::move(transport)),
      fixtures_(std::move(fixtures)),
      in_flight_(std::clamp(settings_.max_concurrency, 1, 1024)) {
    if (!fixtures_) {
        fixtures_ = settings_.fixture_path.empty() ? std::make_shared<FixtureStore>()
                                                   : std::make_shared<FixtureStore>(settings_.fixture_path);
    }
    if (!settings_.sleep) {
        settings_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
    if (!settings_.clock) settings_.clock = [] { return WallTime::now(); };
}

std::size_t Gateway::call_count() const {
    std::lock_guard lock(mu_);
    return calls_;
}

ChatTransport& Gateway::transport() {
    std::lock_guard lock(mu_);
    if (!transport_) transport_ = make_http_transport(settings_.base_url, settings_.api_key);
    return *transport_;
}

CompletionResult Gateway::complete(const PromptBundle& bundle, const GenerationConfig& cfg) {
    {
        std::lock_guard lock(mu_);
        ++calls_;
    }
    if (settings_.mode != GatewayMode::live) {
        if (auto hit = fixtures_->find(bundle.fingerprint)) {
            return CompletionResult{hit->text, 0.0, hit->model_id, hit->finish_reason, hit->recorded_wall};
        }
        if (settings_.mode == GatewayMode::replay) {
            throw GatewayError(ErrorCode::FixtureMiss, bundle.fingerprint, bundle.fingerprint);
        }
    }

    auto result = complete_live(bundle, cfg);
    if (settings_.mode == GatewayMode::record) {
        fixtures_->put(bundle.fingerprint,
                       FixtureEntry{result.text, result.model_id, result.finish_reason, result.created_wall});
    }
    return result;
}

CompletionResult Gateway::complete_live(const PromptBundle& bundle, const GenerationConfig& cfg) {
    cfg.validate();
    ChatRequest req;
    req.model = cfg.model_id;
    if (!bundle.system.empty()) req.messages.push_back({"system", bundle.system});
    req.messages.push_back({"user", bundle.user});
    req.temperature = cfg.temperature;
    req.seed = cfg.seed;
    req.max_tokens = cfg.max_output_tokens;
    req.timeout_seconds = cfg.timeout_seconds;

    const auto& fp = bundle.fingerprint;
    auto started = std::chrono::steady_clock::now();
    ChatTransport& tx = transport();

    for (std::size_t attempt = 0;; ++attempt) {
        ChatResponse resp;
        {
            in_flight_.acquire();
            struct Release {
                std::counting_semaphore<1024>& s;
                ~Release() { s.release(); }
            } release{in_flight_};
            resp = tx.send(req);
        }

        std::optional<GatewayError> retryable;
        if (resp.failure == ChatResponse::Failure::timeout) {
            retryable.emplace(ErrorCode::Timeout, fp, "request timed out: " + resp.failure_detail);
        } else if (resp.failure == ChatResponse::Failure::connection) {
            throw GatewayError(ErrorCode::TransportError, fp, "connection failed: " + resp.failure_detail);
        } else if (resp.status == 401 || resp.status == 403) {
            throw GatewayError(ErrorCode::AuthError, fp, "endpoint rejected credentials (HTTP " +
                                                             std::to_string(resp.status) + ")");
        } else if (resp.status == 429) {
            retryable.emplace(ErrorCode::RateLimited, fp, "rate limited (HTTP 429)", resp.retry_after);
        } else if (resp.status == 408 || resp.status == 504) {
            retryable.emplace(ErrorCode::Timeout, fp, "upstream timeout (HTTP " + std::to_string(resp.status) + ")");
        } else if (resp.status < 200 || resp.status >= 300) {
            throw GatewayError(ErrorCode::TransportError, fp, "unexpected HTTP status " + std::to_string(resp.status));
        }

        if (retryable) {
            if (attempt >= settings_.backoff.size()) throw *retryable;
            settings_.sleep(settings_.backoff[attempt]);
            continue;
        }

        CompletionResult out;
        try {
            auto body = json::parse(resp.body);
            const auto& choice = body.at("choices").at(0);
            const auto& content = choice.at("message").at("content");
            out.text = content.is_null() ? std::string{} : content.get<std::string>();
            if (auto fr = choice.find("finish_reason"); fr != choice.end() && fr->is_string()) {
                out.finish_reason = fr->get<std::string>();
            }
            auto model = body.find("model");
            out.model_id = model != body.end() && model->is_string() ? model->get<std::string>() : cfg.model_id;
        } catch (const json::exception& e) {
            throw GatewayError(ErrorCode::TransportError, fp, std::string("malformed completion body: ") + e.what());
        }
        out.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        out.created_wall = settings_.clock();
        return out;
    }
}

bool detect_refusal(std::string_view text, const RefusalPatterns& patterns) {
    auto trimmed = text::trim(text);
    if (trimmed.empty()) return true;
    for (const auto& p : patterns.prefixes) {
        if (text::starts_with_icase(trimmed, p)) return true;
    }
    for (const auto& s : patterns.substrings) {
        if (text::contains_icase(trimmed, s)) return true;
    }
    return false;
}

}  // namespace noteeline::llm
