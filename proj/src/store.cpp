#include "noteeline/store.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>

#include "noteeline/errors.hpp"
#include "noteeline/hash.hpp"
#include "noteeline/model_json.hpp"
#include "noteeline/text.hpp"
#include "noteeline/transcript.hpp"

namespace noteeline::store {

namespace fs = std::filesystem;

namespace {

std::shared_mutex& document_lock(const fs::path& path) {
    static std::mutex registry_mu;
    static std::map<std::string, std::unique_ptr<std::shared_mutex>> registry;
    std::error_code ec;
    auto key = fs::weakly_canonical(path, ec).string();
    if (ec) key = path.lexically_normal().string();
    std::lock_guard lock(registry_mu);
    auto& slot = registry[key];
    if (!slot) slot = std::make_unique<std::shared_mutex>();
    return *slot;
}

void require_safe(std::string_view id, const char* what) {
    if (!is_safe_id(id)) {
        throw Error(ErrorCode::InvalidRequest, std::string(what) + " id must match [A-Za-z0-9_-]{1,64}: '" +
                                                   std::string(id) + "'");
    }
}

json with_version(json body) {
    body["schema_version"] = kSchemaVersion;
    return body;
}

// Parses a versioned document and strips schema_version.
json parse_versioned(std::string_view bytes, const std::string& what) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ListError(ErrorCode::CorruptDocument, {what + ": " + e.what()});
    }
    if (!doc.is_object()) throw ListError(ErrorCode::CorruptDocument, {what + ": not a JSON object"});
    auto it = doc.find("schema_version");
    if (it == doc.end() || !it->is_number_integer()) {
        throw ListError(ErrorCode::CorruptDocument, {what + ": missing schema_version"});
    }
    auto version = it->get<std::int64_t>();
    if (version > kSchemaVersion) {
        throw Error(ErrorCode::VersionTooNew, what + ": schema_version " + std::to_string(version) +
                                                  " is newer than supported " + std::to_string(kSchemaVersion));
    }
    if (version < 1) throw ListError(ErrorCode::CorruptDocument, {what + ": invalid schema_version"});
    doc.erase("schema_version");
    return doc;
}

std::string note_line(const Notebook& nb, const Micronote& m) {
    const auto* e = nb.ok_expansion(m.id);
    auto body = e ? text::trim_copy(e->text) : text::trim_copy(m.text);
    return "- [" + format_timestamp(m.video_time) + "] " + body + "\n";
}

}  // namespace

std::string notebook_document(const Notebook& nb) { return canonical_dump(with_version(json(nb))); }

Notebook parse_notebook_document(std::string_view bytes) {
    auto doc = parse_versioned(bytes, "notebook");
    Notebook nb;
    try {
        nb = doc.get<Notebook>();
    } catch (const json::exception& e) {
        throw ListError(ErrorCode::CorruptDocument, {std::string("notebook: ") + e.what()});
    } catch (const Error& e) {
        throw ListError(ErrorCode::CorruptDocument, {std::string("notebook: ") + e.what()});
    }
    auto violations = validate_notebook(nb);
    if (!violations.empty()) throw ListError(ErrorCode::CorruptDocument, describe(violations));
    return nb;
}

Store::Store(fs::path base_dir, StoreOptions opts) : base_(std::move(base_dir)), opts_(std::move(opts)) {}

fs::path Store::notebook_path(std::string_view id) const {
    require_safe(id, "notebook");
    return base_ / "notebooks" / (std::string(id) + ".json");
}

fs::path Store::profile_path(std::string_view user_id) const {
    require_safe(user_id, "user");
    return base_ / "profiles" / (std::string(user_id) + ".json");
}

fs::path Store::report_path(std::string_view id) const {
    require_safe(id, "report");
    return base_ / "reports" / (std::string(id) + ".json");
}

fs::path Store::fixture_path() const { return base_ / "fixtures" / "llm.json"; }

fs::path Store::save_notebook_unlocked(const Notebook& nb) {
    auto violations = validate_notebook(nb);
    if (!violations.empty()) throw ListError(ErrorCode::ValidationFailed, describe(violations));
    auto path = notebook_path(nb.id);
    fsutil::write_file_atomic(path, notebook_document(nb), opts_.before_rename);
    return path;
}

fs::path Store::save_notebook(const Notebook& nb) {
    if (!is_safe_id(nb.id)) throw ListError(ErrorCode::ValidationFailed, {"id safe id"});
    std::unique_lock lock(document_lock(notebook_path(nb.id)));
    return save_notebook_unlocked(nb);
}

Notebook Store::load_notebook_unlocked(std::string_view id) const {
    auto nb = parse_notebook_document(fsutil::read_file(notebook_path(id)));
    if (nb.id != id) {
        throw ListError(ErrorCode::CorruptDocument, {"notebook id '" + nb.id + "' does not match file name"});
    }
    return nb;
}

Notebook Store::load_notebook(std::string_view id) const {
    auto path = notebook_path(id);
    std::shared_lock lock(document_lock(path));
    try {
        return load_notebook_unlocked(id);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotFound) throw Error(ErrorCode::NotFound, "notebook " + std::string(id) + " not found");
        throw;
    }
}

bool Store::has_notebook(std::string_view id) const {
    std::error_code ec;
    return fs::exists(notebook_path(id), ec);
}

std::vector<std::string> Store::list_notebooks() const {
    std::vector<std::string> ids;
    std::error_code ec;
    auto dir = base_ / "notebooks";
    if (!fs::exists(dir, ec)) return ids;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (!entry.is_regular_file()) continue;
        const auto& p = entry.path();
        if (p.extension() != ".json") continue;
        auto stem = p.stem().string();
        if (is_safe_id(stem)) ids.push_back(stem);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

Notebook Store::update_notebook(std::string_view id, const std::function<void(Notebook&)>& mutate) {
    auto path = notebook_path(id);
    std::unique_lock lock(document_lock(path));
    Notebook nb;
    try {
        nb = load_notebook_unlocked(id);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotFound) throw Error(ErrorCode::NotFound, "notebook " + std::string(id) + " not found");
        throw;
    }
    mutate(nb);
    if (nb.id != id) throw Error(ErrorCode::ValidationFailed, "notebook id cannot change");
    save_notebook_unlocked(nb);
    return nb;
}

fs::path Store::save_profile(const UserProfile& profile) {
    auto violations = validate_profile(profile);
    if (!violations.empty()) throw ListError(ErrorCode::ValidationFailed, describe(violations));
    auto path = profile_path(profile.user_id);
    std::unique_lock lock(document_lock(path));
    fsutil::write_file_atomic(path, canonical_dump(with_version(json(profile))), opts_.before_rename);
    return path;
}

UserProfile Store::load_profile(std::string_view user_id) const {
    auto path = profile_path(user_id);
    std::shared_lock lock(document_lock(path));
    std::string raw;
    try {
        raw = fsutil::read_file(path);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotFound) throw Error(ErrorCode::NotFound, "profile " + std::string(user_id) + " not found");
        throw;
    }
    auto doc = parse_versioned(raw, "profile");
    UserProfile p;
    try {
        p = doc.get<UserProfile>();
    } catch (const json::exception& e) {
        throw ListError(ErrorCode::CorruptDocument, {std::string("profile: ") + e.what()});
    }
    auto violations = validate_profile(p);
    if (!violations.empty()) throw ListError(ErrorCode::CorruptDocument, describe(violations));
    return p;
}

std::optional<UserProfile> Store::find_profile(std::string_view user_id) const {
    if (!is_safe_id(user_id)) return std::nullopt;
    std::error_code ec;
    if (!fs::exists(profile_path(user_id), ec)) return std::nullopt;
    return load_profile(user_id);
}

fs::path Store::save_report(std::string_view id, const json& report) {
    auto path = report_path(id);
    std::unique_lock lock(document_lock(path));
    fsutil::write_file_atomic(path, canonical_dump(with_version(report)), opts_.before_rename);
    return path;
}

json Store::load_report(std::string_view id) const {
    auto path = report_path(id);
    std::shared_lock lock(document_lock(path));
    return parse_versioned(fsutil::read_file(path), "report");
}

std::string derive_notebook_id(const Notebook& nb) {
    auto seed = nb.user_id + "\n" + nb.title + "\n" + transcript::to_segments_json(nb.transcript);
    return "nb-" + sha256_hex(seed).substr(0, 12);
}

std::string format_timestamp(double video_time) {
    auto total = static_cast<long long>(std::floor(std::max(0.0, video_time)));
    auto minutes = total / 60;
    auto seconds = total % 60;
    std::string mm = std::to_string(minutes);
    std::string ss = std::to_string(seconds);
    if (mm.size() < 2) mm.insert(0, 2 - mm.size(), '0');
    if (ss.size() < 2) ss.insert(0, 1, '0');
    return mm + ":" + ss;
}

std::string export_markdown(const Notebook& nb) {
    std::string out = "# " + (text::is_blank(nb.title) ? nb.id : text::trim_copy(nb.title)) + "\n";

    if (!nb.micronotes.empty()) {
        out += "\n## Notes\n";
        if (nb.ordering_mode == OrderingMode::by_theme && nb.themes) {
            std::set<std::string> themed;
            for (const auto& t : *nb.themes) {
                out += "\n### " + t.theme_name + "\n\n";
                for (const auto& id : t.note_ids) {
                    if (const auto* m = nb.find_micronote(id)) out += note_line(nb, *m);
                    themed.insert(id);
                }
            }
            std::string rest;
            for (const auto& m : nb.micronotes) {
                if (!themed.count(m.id)) rest += note_line(nb, m);
            }
            if (!rest.empty()) out += "\n### Other notes\n\n" + rest;
        } else {
            out += "\n";
            for (const auto& m : nb.micronotes) out += note_line(nb, m);
        }
    }

    if (nb.cue_questions && !nb.cue_questions->empty()) {
        out += "\n## Cues\n";
        static constexpr const char* letters = "ABCD";
        for (std::size_t i = 0; i < nb.cue_questions->size(); ++i) {
            const auto& q = (*nb.cue_questions)[i];
            out += "\n" + std::to_string(i + 1) + ". " + q.question + "\n";
            for (std::size_t k = 0; k < q.options.size() && k < 4; ++k) {
                out += std::string("   - ") + letters[k] + ". " + q.options[k] + "\n";
            }
            if (q.answer_index >= 0 && static_cast<std::size_t>(q.answer_index) < q.options.size()) {
                out += std::string("\n   <details><summary>Answer</summary>") + letters[q.answer_index] + ". " +
                       q.options[static_cast<std::size_t>(q.answer_index)] + "</details>\n";
            }
        }
    }

    if (nb.summary && !text::is_blank(*nb.summary)) {
        out += "\n## Summary\n\n" + text::trim_copy(*nb.summary) + "\n";
    }
    return out;
}

}  // namespace noteeline::store
