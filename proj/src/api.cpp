#include "noteeline/api.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>

#include "noteeline/evaluation.hpp"
#include "noteeline/model_json.hpp"
#include "noteeline/text.hpp"
#include "noteeline/transcript.hpp"

namespace noteeline::api {

namespace {

ApiResponse json_response(int status, const json& body) { return {status, "application/json", canonical_dump(body)}; }

json parse_body(const ApiRequest& req) {
    if (text::is_blank(req.body)) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidRequest, std::string("malformed JSON body: ") + e.what());
    }
}

json require_object(const ApiRequest& req) {
    auto body = parse_body(req);
    if (!body.is_object()) throw Error(ErrorCode::InvalidRequest, "request body must be a JSON object");
    return body;
}

// Converts a json sub-document to T, reporting schema mismatches as 400.
template <typename T>
T body_as(const json& j, const std::string& what) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidRequest, what + ": " + e.what());
    }
}

std::string string_field(const json& body, const char* key, bool required) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null()) {
        if (required) throw Error(ErrorCode::InvalidRequest, std::string("missing field '") + key + "'");
        return {};
    }
    if (!it->is_string()) throw Error(ErrorCode::InvalidRequest, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

bool query_flag(const ApiRequest& req, const char* key, bool fallback) {
    auto it = req.query.find(key);
    if (it == req.query.end()) return fallback;
    auto v = text::ascii_lower(it->second);
    if (v == "true" || v == "1" || v.empty()) return true;
    if (v == "false" || v == "0") return false;
    throw Error(ErrorCode::InvalidRequest, std::string("query parameter '") + key + "' must be true or false");
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') ++i;
        auto j = path.find('/', i);
        if (j == std::string_view::npos) j = path.size();
        if (j > i) parts.emplace_back(path.substr(i, j - i));
        i = j;
    }
    return parts;
}

// Micronote fields plus its current expansion (or null).
json note_view(const Notebook& nb, const Micronote& m) {
    json j = m;
    auto it = nb.expansions.find(m.id);
    j["expansion"] = it == nb.expansions.end() ? json(nullptr) : json(it->second);
    return j;
}

const Micronote& require_note(const Notebook& nb, std::string_view nid) {
    const auto* m = nb.find_micronote(nid);
    if (!m) throw Error(ErrorCode::UnknownNote, "unknown note id '" + std::string(nid) + "'");
    return *m;
}

UserProfile require_onboarded_profile(store::Store& st, const Notebook& nb) {
    if (nb.user_id.empty()) throw Error(ErrorCode::NotOnboarded, "notebook has no user_id");
    auto profile = st.find_profile(nb.user_id);
    if (!profile || !profile->onboarded()) {
        throw Error(ErrorCode::NotOnboarded, "user " + nb.user_id + " has not completed onboarding");
    }
    return *profile;
}

Transcript transcript_from_body(const json& body) {
    Transcript t;
    if (auto it = body.find("captions"); it != body.end() && !it->is_null()) {
        if (!it->is_object()) throw Error(ErrorCode::InvalidRequest, "captions must be an object {format, content}");
        auto format = transcript::format_from_name(string_field(*it, "format", true));
        t = transcript::parse(string_field(*it, "content", true), format);
    } else if (auto tr = body.find("transcript"); tr != body.end() && !tr->is_null()) {
        t = body_as<Transcript>(*tr, "transcript");
    }
    if (auto v = string_field(body, "video_ref", false); !v.empty()) t.video_ref = v;
    if (auto v = string_field(body, "language", false); !v.empty()) t.language = v;
    return t;
}

void throw_if_invalid(const Notebook& nb) {
    auto violations = validate_notebook(nb);
    if (!violations.empty()) throw ListError(ErrorCode::ValidationFailed, describe(violations));
}

}  // namespace

ApiRequest ApiRequest::from_target(std::string method, std::string_view target, std::string body) {
    ApiRequest req;
    req.method = std::move(method);
    req.body = std::move(body);
    auto q = target.find('?');
    req.path = std::string(target.substr(0, q));
    if (q != std::string_view::npos) {
        httplib::Params params;
        httplib::detail::parse_query_text(std::string(target.substr(q + 1)), params);
        for (const auto& [k, v] : params) req.query[k] = v;
    }
    return req;
}

ApiResponse error_response(ErrorCode code, const std::string& detail) {
    const auto& info = error_info(code);
    return json_response(info.http_status, json{{"code", std::string(info.name)}, {"detail", detail}});
}

ApiResponse error_response(const Error& e) { return error_response(e.code(), e.what()); }

ServiceConfig ServiceConfig::from_env(const llm::EnvLookup& env) {
    ServiceConfig cfg;
    auto dir = env("NOTEELINE_STORE_DIR");
    cfg.store_dir = dir && !dir->empty() ? std::filesystem::path(*dir) : std::filesystem::path("noteeline-data");
    cfg.gateway = llm::GatewaySettings::from_env(env, cfg.store_dir / "fixtures" / "llm.json");
    cfg.synthesis.max_concurrency = cfg.gateway.max_concurrency;
    return cfg;
}

ApiService::ApiService(ServiceConfig cfg)
    : cfg_(std::move(cfg)),
      store_(cfg_.store_dir, cfg_.store_options),
      gateway_(std::make_unique<llm::Gateway>(cfg_.gateway, cfg_.transport)) {}

ApiResponse ApiService::handle(const ApiRequest& req) {
    try {
        return dispatch(req);
    } catch (const Error& e) {
        return error_response(e);
    } catch (const json::exception& e) {
        return error_response(ErrorCode::InvalidRequest, e.what());
    } catch (const std::exception& e) {
        return error_response(ErrorCode::Internal, e.what());
    }
}

ApiResponse ApiService::dispatch(const ApiRequest& req) {
    const auto parts = split_path(req.path);
    const auto& m = req.method;
    auto no_route = [&] {
        return error_response(ErrorCode::NotFound, "no route for " + m + " " + req.path);
    };
    auto synth = [this] { return synthesis::Synthesizer(*gateway_, cfg_.synthesis, cfg_.templates); };

    if (parts.size() == 1 && parts[0] == "health" && m == "GET") {
        bool degraded = gateway_->mode() != llm::GatewayMode::replay && !gateway_->has_credentials();
        return json_response(200, {{"status", degraded ? "degraded" : "ok"},
                                   {"mode", std::string(llm::to_string(gateway_->mode()))},
                                   {"schema_version", store::kSchemaVersion}});
    }

    if (!parts.empty() && parts[0] == "profiles") {
        if (parts.size() == 2 && m == "GET") return json_response(200, json(store_.load_profile(parts[1])));
        if (parts.size() == 3 && parts[2] == "onboarding" && m == "POST") {
            if (!is_safe_id(parts[1])) throw Error(ErrorCode::InvalidRequest, "user id must be a safe id");
            auto body = require_object(req);
            auto it = body.find("examples");
            if (it == body.end() || !it->is_array()) {
                throw ListError(ErrorCode::InvalidOnboarding, {"examples must be an array of 3 examples"});
            }
            UserProfile profile;
            profile.user_id = parts[1];
            std::vector<std::string> reasons;
            if (it->size() != kOnboardingExampleCount) {
                reasons.push_back("examples length 3 (got " + std::to_string(it->size()) + ")");
            }
            for (std::size_t i = 0; i < it->size(); ++i) {
                OnboardingExample ex;
                try {
                    ex = (*it)[i].get<OnboardingExample>();
                } catch (const json::exception& e) {
                    reasons.push_back("examples." + std::to_string(i) + " " + e.what());
                    continue;
                }
                for (const auto& v : validate_onboarding_example(ex, "examples." + std::to_string(i))) {
                    reasons.push_back(v.describe());
                }
                profile.examples.push_back(std::move(ex));
            }
            if (!reasons.empty()) throw ListError(ErrorCode::InvalidOnboarding, reasons);
            store_.save_profile(profile);
            return json_response(200, json(profile));
        }
        return no_route();
    }

    if (parts.empty() || parts[0] != "notebooks") return no_route();

    if (parts.size() == 1) {
        if (m == "GET") {
            json list = json::array();
            for (const auto& id : store_.list_notebooks()) {
                auto nb = store_.load_notebook(id);
                list.push_back({{"id", nb.id}, {"title", nb.title}, {"note_count", nb.micronotes.size()}});
            }
            return json_response(200, {{"notebooks", list}});
        }
        if (m == "POST") {
            auto body = require_object(req);
            Notebook nb;
            nb.title = string_field(body, "title", false);
            nb.user_id = string_field(body, "user_id", false);
            nb.transcript = transcript_from_body(body);
            if (auto refs = string_field(body, "reference_notes", false); !refs.empty()) nb.reference_notes = refs;
            nb.id = string_field(body, "id", false);
            if (nb.id.empty()) nb.id = store::derive_notebook_id(nb);
            if (!is_safe_id(nb.id)) throw Error(ErrorCode::InvalidRequest, "notebook id must be a safe id");
            throw_if_invalid(nb);
            if (store_.has_notebook(nb.id)) throw Error(ErrorCode::Conflict, "notebook " + nb.id + " already exists");
            store_.save_notebook(nb);
            return json_response(201, json(nb));
        }
        return no_route();
    }

    const std::string& id = parts[1];

    if (parts.size() == 2 && m == "GET") return json_response(200, json(store_.load_notebook(id)));
    if (parts.size() < 3) return no_route();
    const std::string& action = parts[2];

    if (action == "micronotes" && parts.size() == 3 && m == "POST") {
        auto body = require_object(req);
        Micronote note;
        note.text = string_field(body, "text", true);
        auto vt = body.find("video_time");
        if (vt == body.end() || !vt->is_number()) throw Error(ErrorCode::InvalidRequest, "video_time must be a number");
        note.video_time = vt->get<double>();
        auto now = WallTime::now();
        auto created = string_field(body, "created_wall", false);
        auto finished = string_field(body, "finished_wall", false);
        note.created_wall = created.empty() ? now : WallTime::from_iso8601(created);
        note.finished_wall = finished.empty() ? std::max(now, note.created_wall) : WallTime::from_iso8601(finished);
        json view;
        store_.update_notebook(id, [&](Notebook& nb) {
            note.id = nb.next_micronote_id();
            auto violations = validate_micronote(note);
            if (!violations.empty()) throw ListError(ErrorCode::ValidationFailed, describe(violations));
            nb.micronotes.push_back(note);
            view = note_view(nb, nb.micronotes.back());
        });
        return json_response(201, view);
    }

    if (action == "notes" && parts.size() == 4) {
        const std::string& nid = parts[3];
        if (m == "GET") {
            auto nb = store_.load_notebook(id);
            return json_response(200, note_view(nb, require_note(nb, nid)));
        }
        if (m == "PATCH") {
            auto body = require_object(req);
            bool has_text = body.contains("text");
            bool has_exp = body.contains("expansion_text");
            if (!has_text && !has_exp) throw Error(ErrorCode::InvalidRequest, "expected 'text' or 'expansion_text'");
            json view;
            store_.update_notebook(id, [&](Notebook& nb) {
                require_note(nb, nid);
                auto* note = nb.find_micronote(nid);
                if (has_text) note->text = string_field(body, "text", true);
                if (has_exp) {
                    auto text = string_field(body, "expansion_text", true);
                    auto& e = nb.expansions[nid];
                    if (e.micronote_id.empty()) {
                        e.micronote_id = nid;
                        e.model_id = "user";
                        e.created_wall = WallTime::now();
                    }
                    e.text = text;
                    e.status = ExpansionStatus::ok;
                    e.error.reset();
                }
                throw_if_invalid(nb);
                view = note_view(nb, *note);
            });
            return json_response(200, view);
        }
        return no_route();
    }

    if (m != "POST" && !(m == "GET" && (action == "report" || action == "export.md"))) return no_route();

    if (action == "expand" && parts.size() == 3) {
        synthesis::ExpandOptions opts;
        opts.personalized = query_flag(req, "personalize", true);
        if (auto it = req.query.find("note"); it != req.query.end()) opts.only_note = it->second;
        std::optional<ExpandedNote> single;
        auto nb = store_.update_notebook(id, [&](Notebook& doc) {
            UserProfile profile;
            if (opts.personalized) {
                profile = require_onboarded_profile(store_, doc);
            } else {
                profile.user_id = doc.user_id;
            }
            doc = synth().expand_all(std::move(doc), profile, opts);
            if (opts.only_note) {
                const auto& map = opts.personalized ? doc.expansions : doc.ablation_expansions;
                if (auto it = map.find(*opts.only_note); it != map.end()) single = it->second;
            }
        });
        if (single && single->status == ExpansionStatus::refused) {
            return error_response(ErrorCode::Refused, "model refused to expand note " + single->micronote_id);
        }
        if (single && single->status == ExpansionStatus::failed && single->error) {
            auto code = error_code_from_name(single->error->code).value_or(ErrorCode::Internal);
            return error_response(code, single->error->detail);
        }
        return json_response(200, json(nb));
    }

    if (action == "themes" && parts.size() == 3) {
        auto nb = store_.update_notebook(id, [&](Notebook& doc) {
            auto themes = synth().organize_by_theme(doc);
            doc = synthesis::apply_themes(std::move(doc), std::move(themes));
        });
        return json_response(200, json(nb));
    }

    if (action == "themes" && parts.size() == 4 && parts[3] == "move") {
        auto body = require_object(req);
        auto note_id = string_field(body, "note_id", true);
        auto target = string_field(body, "target", true);
        if (text::is_blank(target)) throw Error(ErrorCode::InvalidRequest, "target theme must be non-empty");
        auto nb = store_.update_notebook(
            id, [&](Notebook& doc) { doc = synthesis::move_note(std::move(doc), note_id, target); });
        return json_response(200, json(nb));
    }

    if (action == "order" && parts.size() == 3) {
        auto body = require_object(req);
        auto mode_name = string_field(body, "mode", true);
        auto mode = ordering_mode_from(mode_name);
        if (!mode) throw Error(ErrorCode::InvalidRequest, "mode must be by_time or by_theme");
        auto nb = store_.update_notebook(id, [&](Notebook& doc) {
            doc = *mode == OrderingMode::by_theme ? synthesis::order_by_theme(std::move(doc))
                                                  : synthesis::order_by_time(std::move(doc));
        });
        return json_response(200, json(nb));
    }

    if (action == "cues" && parts.size() == 3) {
        bool regenerate = query_flag(req, "regenerate", false);
        auto nb = store_.update_notebook(id, [&](Notebook& doc) {
            auto s = synth();
            doc = synthesis::refresh_cue_questions(s, std::move(doc), regenerate);
        });
        return json_response(200, json(nb));
    }

    if (action == "summary" && parts.size() == 3) {
        auto nb = store_.update_notebook(id, [&](Notebook& doc) { doc.summary = synth().generate_summary(doc); });
        return json_response(200, json(nb));
    }

    if (action == "events" && parts.size() == 3) {
        auto body = parse_body(req);
        const json* list = &body;
        if (body.is_object()) {
            auto it = body.find("events");
            if (it == body.end()) throw Error(ErrorCode::InvalidRequest, "expected {\"events\": [...]}");
            list = &*it;
        }
        if (!list->is_array()) throw Error(ErrorCode::InvalidRequest, "events must be an array");
        auto events = body_as<std::vector<PlaybackEvent>>(*list, "events");
        auto nb = store_.update_notebook(id, [&](Notebook& doc) {
            doc.events.insert(doc.events.end(), events.begin(), events.end());
        });
        return json_response(200, json(nb));
    }

    if (action == "report" && parts.size() == 3 && m == "GET") {
        auto nb = store_.load_notebook(id);
        std::optional<UserProfile> profile;
        if (!nb.user_id.empty()) profile = store_.find_profile(nb.user_id);
        stylometry::EvaluationOptions opts;
        opts.window = cfg_.synthesis.window;
        if (auto it = req.query.find("n_top"); it != req.query.end()) {
            char* end = nullptr;
            auto n = std::strtoull(it->second.c_str(), &end, 10);
            if (it->second.empty() || *end != '\0' || n == 0) {
                throw Error(ErrorCode::InvalidRequest, "n_top must be a positive integer");
            }
            opts.n_top = n;
        }
        auto report = stylometry::to_json(stylometry::evaluate(nb, profile ? &*profile : nullptr, opts));
        store_.save_report(id, report);
        return json_response(200, report);
    }

    if (action == "export.md" && parts.size() == 3 && m == "GET") {
        return {200, "text/markdown; charset=utf-8", store::export_markdown(store_.load_notebook(id))};
    }

    return no_route();
}

void bind_routes(httplib::Server& server, ApiService& service) {
    auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
        ApiRequest ar;
        ar.method = req.method;
        ar.path = req.path;
        ar.body = req.body;
        for (const auto& [k, v] : req.params) ar.query[k] = v;
        auto out = service.handle(ar);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Patch(".*", handler);
    server.Put(".*", handler);
    server.Delete(".*", handler);
}

std::pair<std::string, int> parse_bind_addr(std::string_view addr) {
    std::string host = "127.0.0.1";
    int port = 8080;
    auto colon = addr.rfind(':');
    auto host_part = colon == std::string_view::npos ? addr : addr.substr(0, colon);
    if (!host_part.empty()) host = std::string(host_part);
    if (colon != std::string_view::npos) {
        std::string p(addr.substr(colon + 1));
        char* end = nullptr;
        long v = std::strtol(p.c_str(), &end, 10);
        if (p.empty() || *end != '\0' || v < 0 || v > 65535) {
            throw Error(ErrorCode::InvalidRequest, "invalid port in bind address '" + std::string(addr) + "'");
        }
        port = static_cast<int>(v);
    }
    return {host, port};
}

bool serve(ApiService& service, const std::string& host, int port) {
    httplib::Server server;
    bind_routes(server, service);
    return server.listen(host, port);
}

}  // namespace noteeline::api
