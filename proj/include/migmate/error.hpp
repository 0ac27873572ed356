#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace migmate {

enum class ErrorCode {
    Internal,
    IoError,
    // depfile
    UnsupportedFileKind,
    InvalidToml,
    SourceNotDeclared,
    NoDependencyFile,
    // llm gateway
    MissingApiKey,
    AuthFailed,
    TransportError,
    ModelRefusal,
    EmptyResponse,
    MockTranscriptMiss,
    FileTooLarge,
    // test harness
    RunnerNotFound,
    NoReportProduced,
    InvalidReport,
    // diff engine
    ContextMismatch,
    UnknownHunkId,
    AlreadyApplied,
    InvalidState,
    // pipeline
    SpliceAmbiguous,
    SyntaxCheckFailed,
    // session store
    SessionAlreadyRunning,
    SessionNotFound,
    CorruptSession,
    RoundImmutable,
    // cli / service
    InvalidConfig,
    PortInUse,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for an error that escapes to the CLI.
/// 4 config/auth, 5 not-found, 6 conflict, 7 service, 1 anything else.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string detail = {})
        : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail))
    {
    }

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace migmate
