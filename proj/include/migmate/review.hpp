#pragma once

#include "migmate/diff.hpp"
#include "migmate/session.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace migmate {

/// The final per-file diffs offered for selective application.
struct ReviewSet {
    std::optional<std::size_t> round_index;
    std::vector<diff::FileDiff> files;

    const diff::FileDiff* file(std::string_view path) const;
    diff::FileDiff* file(std::string_view path);
    diff::Hunk* hunk(std::string_view id);
    std::size_t count(diff::HunkState s) const;
};

/// Diffs pristine against `snapshots`; files without changes are left out.
ReviewSet build_review_set(const MigrationSession& session, const std::map<std::string, std::string>& snapshots,
                           std::optional<std::size_t> round_index);

void save_review(const MigrationSession& session, const ReviewSet& review);

/// Regenerates the diffs from pristine/ and the chosen round, then overlays the stored hunk states.
/// Returns an empty set when the session has not been finalized yet.
ReviewSet load_review(const SessionStore& store, const MigrationSession& session);

nlohmann::json to_json(const ReviewSet& review);

struct HunkChange {
    std::string id;
    diff::HunkState state;
};

struct ApplyResult {
    std::vector<HunkChange> changed;
    std::vector<std::string> written_files;
    SessionState state = SessionState::AwaitingReview;
};

/// Review-time mutations of one session. Every workspace write first checks
/// that the file still equals pristine plus the hunks applied so far.
class ReviewController {
public:
    ReviewController(const SessionStore& store, MigrationSession session);

    const MigrationSession& session() const { return session_; }
    const ReviewSet& review() const { return review_; }
    /// Recorded on telemetry events: "cli" or "api".
    void set_trigger(std::string trigger) { trigger_ = std::move(trigger); }

    /// Incremental flow.
    ApplyResult apply_hunks(const std::vector<std::string>& ids);
    ApplyResult apply_file(const std::string& path);
    /// Applies the remainder and finishes the review.
    ApplyResult apply_all();

    /// Bulk flow: writes `accepted` in one edit per file, discards the rest, finishes the review.
    /// A conflict in any file aborts the edit before anything is written.
    ApplyResult apply_bulk(const std::set<std::string>& accepted, std::string_view granularity = "bulk");

    /// Dispatches on the session's preview style; scope is hunk, file or all.
    ApplyResult apply(std::string_view scope, const std::vector<std::string>& ids);

    /// Discards pending hunks and marks the session done.
    ApplyResult close();

private:
    void require_reviewable() const;
    std::string expected_on_disk(const diff::FileDiff& file) const;
    std::string applied_content(const diff::FileDiff& file, const std::set<std::string>& extra) const;
    void check_disk(const diff::FileDiff& file) const;
    void mark_applying();
    void finish(ApplyResult& result, bool auto_closed);
    ApplyResult write_incremental(const std::vector<std::string>& ids);
    void event(std::string kind, nlohmann::json attrs) const;

    const SessionStore& store_;
    MigrationSession session_;
    ReviewSet review_;
    std::map<std::string, std::string> pristine_;
    std::string trigger_ = "cli";
};

} // namespace migmate
