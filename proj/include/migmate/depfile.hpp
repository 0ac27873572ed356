#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace migmate::depfile {

enum class FileKind { Requirements, Pyproject };

std::string_view to_string(FileKind kind);

/// PEP 503 style normalization: lowercase, runs of '-', '_' and '.' collapse to '-'.
std::string normalize_name(std::string_view name);

struct DependencyEntry {
    std::string name;     // normalized
    std::string raw_name; // as written
    std::optional<std::string> version_spec;
    std::size_t line = 0; // 1-based
    FileKind file_kind = FileKind::Requirements;

    // Byte range in the file covering `raw_name[extras] spec`; rewriting replaces
    // exactly this range so markers, comments and quoting survive untouched.
    std::size_t replace_begin = 0;
    std::size_t replace_end = 0;
    // pyproject only: the enclosing array key, e.g. "project.dependencies".
    std::string group;
};

struct DependencyFile {
    std::string path; // workspace-relative
    FileKind kind = FileKind::Requirements;
    std::vector<DependencyEntry> entries;
    std::string raw;
    std::vector<std::string> warnings;

    const DependencyEntry* find(std::string_view library) const;
    /// The untouched file bytes; entries never alter the serialization.
    const std::string& serialize() const { return raw; }
};

/// Kind from the file name alone; nullopt when the name is not a dependency file.
std::optional<FileKind> kind_for_path(const std::filesystem::path& path);

/// Throws UnsupportedFileKind for unknown names and InvalidToml for broken pyproject files.
DependencyFile parse_dependency_file(const std::string& path, std::string_view content);

/// Replaces the source declaration with `target` (plus `target_spec` when given).
/// Throws SourceNotDeclared when `source` is absent.
std::string rewrite_dependency(const DependencyFile& file, std::string_view source, std::string_view target,
                               const std::optional<std::string>& target_spec = std::nullopt);

/// Dependency files found directly in the workspace root, sorted by name.
std::vector<DependencyFile> discover(const std::filesystem::path& workspace);

} // namespace migmate::depfile
