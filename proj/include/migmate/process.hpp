#pragma once

#include <chrono>
#include <filesystem>
#include <string>

namespace migmate::process {

struct Result {
    bool launched = false;
    bool timed_out = false;
    /// Exit status, or 128 + signal number when killed by a signal.
    int exit_code = -1;
    /// Interleaved stdout and stderr.
    std::string output;
};

/// Runs `command` through /bin/sh in its own process group; the whole group is
/// killed when `timeout` elapses.
Result run_shell(const std::string& command, const std::filesystem::path& cwd, std::chrono::milliseconds timeout);

/// Kills every process group started by run_shell that is still running.
void kill_active() noexcept;

} // namespace migmate::process
