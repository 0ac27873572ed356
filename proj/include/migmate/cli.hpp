#pragma once

#include "migmate/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace migmate::cli {

struct Io {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
    /// Whether prompts may be shown; also selects the apply-mode default.
    bool interactive = false;
    std::filesystem::path cwd = std::filesystem::current_path();
    config::EnvLookup env = config::process_env();
    /// Install SIGINT/SIGTERM handling for long-running commands.
    bool handle_signals = false;
};

/// Runs one command line (without the program name) and returns the exit status:
/// 0 clean, 2 regressed, 3 aborted, 4 config/auth, 5 not found, 6 conflict, 7 service, 1 other.
int run(const std::vector<std::string>& args, Io io);

} // namespace migmate::cli
