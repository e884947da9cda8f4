#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace noteeline {

// Every failure the engine can surface. The HTTP status and CLI exit code
// for each live in error_table().
enum class ErrorCode : std::uint8_t {
    InvalidRequest,
    NotFound,
    Conflict,
    ValidationFailed,
    InvalidOnboarding,
    NotOnboarded,
    TooFewNotes,
    NoNotes,
    NotInThemeMode,
    UnknownNote,
    FormatError,
    EmptyTranscript,
    EmptyCorpus,
    EmptyProfile,
    ZeroVector,
    DimensionMismatch,
    ParseError,
    Refused,
    FixtureMiss,
    AuthError,
    RateLimited,
    Timeout,
    TransportError,
    CorruptDocument,
    VersionTooNew,
    IoError,
    Internal,
};

struct ErrorInfo {
    ErrorCode code;
    std::string_view name;  // machine string, e.g. "PARSE_ERROR"
    int http_status;
    int exit_code;          // 2 validation, 3 gateway/model, 1 other
};

const std::vector<ErrorInfo>& error_table();
const ErrorInfo& error_info(ErrorCode code);
std::string_view error_name(ErrorCode code);
std::optional<ErrorCode> error_code_from_name(std::string_view name);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    std::string detail() const { return what(); }

private:
    ErrorCode code_;
};

// Caption / segment-file parse failure. line is 1-based, 0 when unknown.
class FormatError : public Error {
public:
    FormatError(std::size_t line, const std::string& reason);

    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

// Errors raised by the LLM gateway; always carry the prompt fingerprint.
class GatewayError : public Error {
public:
    GatewayError(ErrorCode code, std::string fingerprint, const std::string& detail,
                 std::optional<double> retry_after = std::nullopt)
        : Error(code, detail), fingerprint_(std::move(fingerprint)), retry_after_(retry_after) {}

    const std::string& fingerprint() const noexcept { return fingerprint_; }
    std::optional<double> retry_after() const noexcept { return retry_after_; }

private:
    std::string fingerprint_;
    std::optional<double> retry_after_;
};

// Structured model output that failed to parse or validate after the repair retry.
class ParseError : public Error {
public:
    ParseError(std::string raw_text, std::string reason)
        : Error(ErrorCode::ParseError, reason), raw_text_(std::move(raw_text)), reason_(std::move(reason)) {}

    const std::string& raw_text() const noexcept { return raw_text_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string raw_text_;
    std::string reason_;
};

// Carries a list of human-readable reasons (violations, corruption causes).
class ListError : public Error {
public:
    ListError(ErrorCode code, std::vector<std::string> reasons);

    const std::vector<std::string>& reasons() const noexcept { return reasons_; }

private:
    std::vector<std::string> reasons_;
};

}  // namespace noteeline
