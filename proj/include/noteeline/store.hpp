#pragma once
// On-disk document store.
//
//   <base>/profiles/<user>.json
//   <base>/notebooks/<id>.json
//   <base>/fixtures/llm.json
//   <base>/reports/<id>.json
//
// Documents are canonical JSON (sorted keys, LF) with a top-level
// schema_version. Writes go through temp file + fsync + rename. Each document
// has a process-wide reader/writer lock.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "noteeline/fsutil.hpp"
#include "noteeline/model.hpp"

namespace noteeline::store {

inline constexpr int kSchemaVersion = 1;

struct StoreOptions {
    // Test seam: runs between temp-file write and rename.
    fsutil::BeforeRenameHook before_rename;
};

// Canonical document bytes for a notebook (includes schema_version).
std::string notebook_document(const Notebook& nb);
// Parses and re-validates a document. Throws CorruptDocument, VersionTooNew.
Notebook parse_notebook_document(std::string_view bytes);

class Store {
public:
    explicit Store(std::filesystem::path base_dir, StoreOptions opts = {});

    const std::filesystem::path& base_dir() const { return base_; }
    std::filesystem::path notebook_path(std::string_view id) const;
    std::filesystem::path profile_path(std::string_view user_id) const;
    std::filesystem::path report_path(std::string_view id) const;
    std::filesystem::path fixture_path() const;

    // Throws ListError(ValidationFailed) with the violations, Error(IoError).
    std::filesystem::path save_notebook(const Notebook& nb);
    // Throws NotFound, CorruptDocument, VersionTooNew.
    Notebook load_notebook(std::string_view id) const;
    bool has_notebook(std::string_view id) const;
    std::vector<std::string> list_notebooks() const;

    // Load, mutate, validate and save under the document's writer lock.
    Notebook update_notebook(std::string_view id, const std::function<void(Notebook&)>& mutate);

    std::filesystem::path save_profile(const UserProfile& profile);
    UserProfile load_profile(std::string_view user_id) const;
    std::optional<UserProfile> find_profile(std::string_view user_id) const;

    std::filesystem::path save_report(std::string_view id, const nlohmann::json& report);
    nlohmann::json load_report(std::string_view id) const;

private:
    std::filesystem::path save_notebook_unlocked(const Notebook& nb);
    Notebook load_notebook_unlocked(std::string_view id) const;

    std::filesystem::path base_;
    StoreOptions opts_;
};

// Deterministic id for a new notebook: "nb-" + 12 hex chars of a hash over
// user, title and transcript.
std::string derive_notebook_id(const Notebook& nb);

// Markdown view of a notebook: notes (themed or by time), cue questions with
// collapsed answers, summary. Expanded text is used when ok, the micronote
// otherwise.
std::string export_markdown(const Notebook& nb);

std::string format_timestamp(double video_time);  // [mm:ss] body, e.g. "01:05"

}  // namespace noteeline::store
