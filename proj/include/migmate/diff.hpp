#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace migmate::diff {

enum class LineKind { Context, Removed, Added };

struct HunkLine {
    LineKind kind = LineKind::Context;
    std::string text;        // without the line terminator
    bool no_newline = false; // last line of its file, unterminated
};

enum class HunkState { Pending, Accepted, Rejected, Applied };

std::string_view to_string(HunkState s);
HunkState hunk_state_from_string(std::string_view s);

/// pending -> accepted | rejected | applied, accepted -> applied.
bool transition_allowed(HunkState from, HunkState to);

struct Hunk {
    std::string id; // "<path>:<index>"
    // Header numbers in unified-diff convention (1-based; a zero-length side
    // names the line after which the change sits).
    std::size_t old_start = 0, old_len = 0;
    std::size_t new_start = 0, new_len = 0;
    // 0-based line positions where each side of the hunk begins.
    std::size_t old_index = 0, new_index = 0;
    std::vector<HunkLine> lines;
    HunkState state = HunkState::Pending;

    std::string header() const;
    std::string added_text() const;
    std::string removed_text() const;
};

enum class FileKind { Source, Dependency };
std::string_view to_string(FileKind k);

struct FileDiff {
    std::string path;
    std::string original; // '\n'-normalized
    std::string migrated; // '\n'-normalized
    std::vector<Hunk> hunks;
    FileKind kind = FileKind::Source;
    std::string eol = "\n"; // original flavor, restored on write

    const Hunk* find(std::string_view id) const;
    Hunk* find(std::string_view id);
};

/// Converts CRLF to LF; reports the dominant flavor of the input through `eol`.
std::string normalize_eol(std::string_view text, std::string* eol = nullptr);
std::string restore_eol(std::string_view text, std::string_view eol);

/// Line-level Myers diff, grouped into unified hunks with `context` lines.
/// `path` prefixes the hunk ids.
std::vector<Hunk> compute_diff(std::string_view original, std::string_view migrated, std::size_t context = 3,
                               std::string_view path = {});

FileDiff make_file_diff(std::string path, std::string_view original_bytes, std::string_view migrated_bytes,
                        FileKind kind, std::size_t context = 3);

/// `original` with exactly the hunks named in `selected` applied.
/// Throws UnknownHunkId or ContextMismatch.
std::string apply_selection(const FileDiff& file, const std::set<std::string>& selected);

/// Same, applied to an arbitrary base text that must match the hunks' old sides.
std::string apply_hunks(std::string_view base, const std::vector<Hunk>& hunks, const std::set<std::string>& selected,
                        std::string_view path = {});

std::string to_unified(const FileDiff& file);

} // namespace migmate::diff
