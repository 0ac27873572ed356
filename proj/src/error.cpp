#include "migmate/error.hpp"

namespace migmate {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::Internal: return "Internal";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnsupportedFileKind: return "UnsupportedFileKind";
    case ErrorCode::InvalidToml: return "InvalidToml";
    case ErrorCode::SourceNotDeclared: return "SourceNotDeclared";
    case ErrorCode::NoDependencyFile: return "NoDependencyFile";
    case ErrorCode::MissingApiKey: return "MissingApiKey";
    case ErrorCode::AuthFailed: return "AuthFailed";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ModelRefusal: return "ModelRefusal";
    case ErrorCode::EmptyResponse: return "EmptyResponse";
    case ErrorCode::MockTranscriptMiss: return "MockTranscriptMiss";
    case ErrorCode::FileTooLarge: return "FileTooLarge";
    case ErrorCode::RunnerNotFound: return "RunnerNotFound";
    case ErrorCode::NoReportProduced: return "NoReportProduced";
    case ErrorCode::InvalidReport: return "InvalidReport";
    case ErrorCode::ContextMismatch: return "ContextMismatch";
    case ErrorCode::UnknownHunkId: return "UnknownHunkId";
    case ErrorCode::AlreadyApplied: return "AlreadyApplied";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::SpliceAmbiguous: return "SpliceAmbiguous";
    case ErrorCode::SyntaxCheckFailed: return "SyntaxCheckFailed";
    case ErrorCode::SessionAlreadyRunning: return "SessionAlreadyRunning";
    case ErrorCode::SessionNotFound: return "SessionNotFound";
    case ErrorCode::CorruptSession: return "CorruptSession";
    case ErrorCode::RoundImmutable: return "RoundImmutable";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::PortInUse: return "PortInUse";
    }
    return "Unknown";
}

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::MissingApiKey:
    case ErrorCode::AuthFailed:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidToml:
        return 4;
    case ErrorCode::SourceNotDeclared:
    case ErrorCode::NoDependencyFile:
    case ErrorCode::SessionNotFound:
    case ErrorCode::UnknownHunkId:
        return 5;
    case ErrorCode::ContextMismatch:
    case ErrorCode::AlreadyApplied:
    case ErrorCode::InvalidState:
    case ErrorCode::SessionAlreadyRunning:
        return 6;
    case ErrorCode::PortInUse:
        return 7;
    default:
        return 1;
    }
}

} // namespace migmate
