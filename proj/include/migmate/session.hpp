#pragma once

#include "migmate/diff.hpp"
#include "migmate/options.hpp"
#include "migmate/round.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace migmate {

inline constexpr int kSchemaVersion = 1;

enum class SessionState { Initializing, Running, AwaitingReview, Applying, Done, Aborted };

std::string_view to_string(SessionState s);
SessionState session_state_from_string(std::string_view s);

/// Forward moves through the listed order; aborted from any state except done.
bool session_transition_allowed(SessionState from, SessionState to);

struct Progress {
    std::string round;
    std::size_t file_index = 0;
    std::size_t file_count = 0;
    std::string message;
};

/// One file captured in pristine/ when the session was created.
struct PristineFile {
    std::string path;
    diff::FileKind kind = diff::FileKind::Source;
    bool is_test = false;
    bool send_to_llm = false;
    std::vector<std::size_t> import_lines;
};

struct TelemetryEvent {
    /// migration_started | hunk_applied | file_applied | all_applied | preview_closed | tests_viewed
    std::string kind;
    nlohmann::json attrs = nlohmann::json::object();
    std::string at;
};

struct MigrationSession {
    std::string id;
    std::filesystem::path workspace;
    std::filesystem::path dir; // <workdir>/sessions/<id>
    MigrationOptions options;
    nlohmann::json config_origin = nlohmann::json::object();
    std::string created_at;
    SessionState state = SessionState::Initializing;
    std::optional<MigrationVerdict> verdict;
    Progress progress;
    std::vector<PristineFile> files;
    /// Archived round directory names in order.
    std::vector<std::string> rounds;

    std::filesystem::path pristine_path(std::string_view rel) const;
    const PristineFile* file(std::string_view rel) const;
};

/// Owns the work directory layout:
///   <workdir>/lock
///   <workdir>/sessions/<id>/{config, session, pristine/, rounds/NN-<kind>/, review/, events.log, log.txt}
class SessionStore {
public:
    SessionStore(std::filesystem::path workspace, std::optional<std::filesystem::path> workdir = std::nullopt);

    const std::filesystem::path& workspace() const { return workspace_; }
    const std::filesystem::path& workdir() const { return workdir_; }

    /// Takes the workspace lock, then writes config and the pristine snapshot.
    /// `pristine` maps relative paths to the exact file bytes.
    MigrationSession create(const MigrationOptions& options, const std::vector<PristineFile>& files,
                            const std::map<std::string, std::string>& pristine,
                            const nlohmann::json& config_origin = nlohmann::json::object(), bool force = false);

    /// Throws SessionNotFound or CorruptSession (naming the bad file).
    MigrationSession load(const std::string& id) const;
    std::vector<std::string> list() const;
    std::optional<std::string> latest() const;

    /// Persists state, progress and verdict.
    void save_state(const MigrationSession& session) const;
    void set_state(MigrationSession& session, SessionState next) const;

    /// Writes rounds/NN-<kind>/ atomically. Throws RoundImmutable if it exists.
    void archive_round(MigrationSession& session, const RoundRecord& record) const;
    std::vector<RoundRecord> load_rounds(const MigrationSession& session) const;
    RoundRecord load_round(const MigrationSession& session, const std::string& dir_name) const;

    /// Appends one line to events.log; failures are reported on stderr and dropped.
    void record_event(const MigrationSession& session, TelemetryEvent event) const noexcept;
    std::vector<TelemetryEvent> events(const MigrationSession& session) const;

    /// Appends a timestamped line to log.txt.
    void log(const MigrationSession& session, std::string_view message) const noexcept;

    // Workspace lock.
    void acquire_lock(const std::string& session_id, bool force) const;
    void release_lock(const std::string& session_id) const noexcept;
    /// Session id of the live lock holder, if any.
    std::optional<std::string> live_lock_holder() const;
    /// True when the session claims to be running but no live process holds its lock.
    bool interrupted(const MigrationSession& session) const;

private:
    std::filesystem::path workspace_;
    std::filesystem::path workdir_;
    mutable std::mutex write_mutex_;
};

nlohmann::json pristine_file_json(const PristineFile& f);
PristineFile pristine_file_from_json(const nlohmann::json& j);

} // namespace migmate
