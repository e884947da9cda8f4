#include "noteeline/errors.hpp"

#include <algorithm>

namespace noteeline {

const std::vector<ErrorInfo>& error_table() {
    static const std::vector<ErrorInfo> table = {
        {ErrorCode::InvalidRequest, "INVALID_REQUEST", 400, 2},
        {ErrorCode::NotFound, "NOT_FOUND", 404, 2},
        {ErrorCode::Conflict, "CONFLICT", 409, 2},
        {ErrorCode::ValidationFailed, "VALIDATION_FAILED", 422, 2},
        {ErrorCode::InvalidOnboarding, "INVALID_ONBOARDING", 422, 2},
        {ErrorCode::NotOnboarded, "NOT_ONBOARDED", 422, 2},
        {ErrorCode::TooFewNotes, "TOO_FEW_NOTES", 422, 2},
        {ErrorCode::NoNotes, "NO_NOTES", 422, 2},
        {ErrorCode::NotInThemeMode, "NOT_IN_THEME_MODE", 409, 2},
        {ErrorCode::UnknownNote, "UNKNOWN_NOTE", 404, 2},
        {ErrorCode::FormatError, "FORMAT_ERROR", 422, 2},
        {ErrorCode::EmptyTranscript, "EMPTY_TRANSCRIPT", 422, 2},
        {ErrorCode::EmptyCorpus, "EMPTY_CORPUS", 422, 2},
        {ErrorCode::EmptyProfile, "EMPTY_PROFILE", 422, 2},
        {ErrorCode::ZeroVector, "ZERO_VECTOR", 422, 2},
        {ErrorCode::DimensionMismatch, "DIMENSION_MISMATCH", 422, 2},
        {ErrorCode::ParseError, "PARSE_ERROR", 502, 3},
        {ErrorCode::Refused, "REFUSED", 422, 3},
        {ErrorCode::FixtureMiss, "FIXTURE_MISS", 503, 3},
        {ErrorCode::AuthError, "AUTH_ERROR", 502, 3},
        {ErrorCode::RateLimited, "RATE_LIMITED", 429, 3},
        {ErrorCode::Timeout, "TIMEOUT", 504, 3},
        {ErrorCode::TransportError, "TRANSPORT_ERROR", 502, 3},
        {ErrorCode::CorruptDocument, "CORRUPT_DOCUMENT", 500, 1},
        {ErrorCode::VersionTooNew, "VERSION_TOO_NEW", 500, 1},
        {ErrorCode::IoError, "IO_ERROR", 500, 1},
        {ErrorCode::Internal, "INTERNAL", 500, 1},
    };
    return table;
}

const ErrorInfo& error_info(ErrorCode code) {
    const auto& table = error_table();
    auto it = std::find_if(table.begin(), table.end(),
                           [code](const ErrorInfo& e) { return e.code == code; });
    return it == table.end() ? table.back() : *it;
}

std::string_view error_name(ErrorCode code) { return error_info(code).name; }

std::optional<ErrorCode> error_code_from_name(std::string_view name) {
    for (const auto& e : error_table()) {
        if (e.name == name) return e.code;
    }
    return std::nullopt;
}

FormatError::FormatError(std::size_t line, const std::string& reason)
    : Error(ErrorCode::FormatError,
            line > 0 ? "line " + std::to_string(line) + ": " + reason : reason),
      line_(line),
      reason_(reason) {}

static std::string join_reasons(const std::vector<std::string>& reasons) {
    std::string out;
    for (const auto& r : reasons) {
        if (!out.empty()) out += "; ";
        out += r;
    }
    return out;
}

ListError::ListError(ErrorCode code, std::vector<std::string> reasons)
    : Error(code, join_reasons(reasons)), reasons_(std::move(reasons)) {}

}  // namespace noteeline
