#pragma once

#include "migmate/test_harness.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace migmate {

/// Pipeline stages in execution order.
enum class RoundKind { Premig, Llmmig, Reinclude, Asyncfix };

std::string_view to_string(RoundKind k);
RoundKind round_kind_from_string(std::string_view s);

struct FileOutcome {
    std::string path;
    /// migrated | unmigrated | reincluded | asyncfixed | reverted | rewritten
    std::string status;
    bool elided = false;
    std::optional<std::string> warning;
    /// Full model reply for llmmig files, kept for auditing.
    std::optional<std::string> raw_response;
};

struct RoundRecord {
    RoundKind kind = RoundKind::Premig;
    std::size_t index = 0;
    /// Path -> full file content after this round (empty for premig).
    std::map<std::string, std::string> snapshots;
    std::optional<harness::TestReport> report;
    std::optional<harness::ReportComparison> comparison;
    /// Whether the round's snapshot replaced the incumbent one.
    bool accepted = true;
    std::vector<FileOutcome> files;
    std::vector<std::string> warnings;
    std::string started_at;
    std::string finished_at;

    /// Directory name under rounds/, e.g. "01-llmmig".
    std::string dir_name() const;
    const FileOutcome* outcome(std::string_view path) const;
};

nlohmann::json notes_json(const RoundRecord& r);

enum class VerdictStatus { Clean, Regressed, Aborted };
std::string_view to_string(VerdictStatus s);
VerdictStatus verdict_status_from_string(std::string_view s);

struct MigrationVerdict {
    VerdictStatus status = VerdictStatus::Aborted;
    std::optional<RoundKind> final_round;
    /// Index of the round whose snapshot forms the review set.
    std::optional<std::size_t> final_round_index;
    std::vector<std::string> regressions;
    std::string reason;
};

nlohmann::json to_json(const MigrationVerdict& v);
MigrationVerdict verdict_from_json(const nlohmann::json& j);

} // namespace migmate
