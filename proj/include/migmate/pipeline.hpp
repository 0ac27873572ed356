#pragma once

#include "migmate/depfile.hpp"
#include "migmate/llm.hpp"
#include "migmate/options.hpp"
#include "migmate/review.hpp"
#include "migmate/round.hpp"
#include "migmate/session.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace migmate {

/// Pre-session checks and the file set a session will snapshot.
struct PreparedMigration {
    std::vector<PristineFile> files;
    std::map<std::string, std::string> pristine;
    std::vector<std::string> warnings;
    std::string import_name;
};

/// Throws NoDependencyFile, SourceNotDeclared, InvalidToml.
PreparedMigration prepare_migration(const std::filesystem::path& workspace, const MigrationOptions& options,
                                    const std::filesystem::path& workdir);

/// Mock backend when a transcript is configured, otherwise the HTTP client (throws MissingApiKey).
std::unique_ptr<llm::ChatBackend> make_backend(const MigrationOptions& options);

/// Validates, prepares and creates a session, recording migration_started.
MigrationSession start_session(SessionStore& store, const MigrationOptions& options,
                               const nlohmann::json& config_origin = nlohmann::json::object(), bool force = false);

using ProgressSink = std::function<void(const Progress&)>;

/// Drives one session through its rounds. Rounds already archived are reused,
/// so running an interrupted session resumes it.
class Pipeline {
public:
    Pipeline(const SessionStore& store, MigrationSession& session, std::unique_ptr<llm::ChatBackend> backend = nullptr,
             ProgressSink progress = {});

    /// Runs the remaining rounds, then finalizes. The workspace itself is never written.
    MigrationVerdict run();

private:
    std::optional<RoundRecord> run_premig();
    RoundRecord run_llmmig(const RoundRecord& baseline);
    std::optional<RoundRecord> run_reinclude(const RoundRecord& baseline, const RoundRecord& incumbent);
    std::optional<RoundRecord> run_asyncfix(const RoundRecord& baseline, const RoundRecord& incumbent);
    MigrationVerdict finalize(const std::vector<RoundRecord>& rounds, bool aborted, std::string reason);

    harness::TestReport run_suite(const RoundRecord& round);
    void compare(RoundRecord& round, const RoundRecord& baseline) const;
    void archive(RoundRecord& round, std::vector<RoundRecord>& rounds);
    void report_progress(std::string round, std::size_t index, std::size_t count, std::string message);
    void note(std::string_view message) const;
    llm::ChatBackend& backend();
    std::filesystem::path staging() const;

    const SessionStore& store_;
    MigrationSession& session_;
    std::unique_ptr<llm::ChatBackend> backend_;
    ProgressSink progress_;
};

/// The accepted round with the highest index among the changing rounds.
const RoundRecord* best_round(const std::vector<RoundRecord>& rounds);

/// Finishes an interrupted session: reclaims its lock and runs the missing rounds.
/// Returns false when the session was not interrupted.
bool resume_if_interrupted(const SessionStore& store, MigrationSession& session, ProgressSink progress = {});

} // namespace migmate
