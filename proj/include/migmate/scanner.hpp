#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace migmate::scanner {

struct RelevantFile {
    std::string path; // workspace-relative, forward slashes
    std::vector<std::size_t> import_lines;
    std::string content;
    bool is_test = false;
};

struct ScanOptions {
    /// Extra glob patterns (`scan.exclude`); matched against the relative path and the base name.
    std::vector<std::string> excludes;
    /// Absolute work directory, excluded when it lies inside the workspace.
    std::filesystem::path workdir;
};

const std::vector<std::string>& default_excludes();

std::string import_name_for(std::string_view library, const std::map<std::string, std::string>& overrides);

/// 1-based lines where an import statement names `import_name` or one of its submodules.
std::vector<std::size_t> find_import_lines(std::string_view content, std::string_view import_name);

bool is_test_path(std::string_view relative_path);

bool is_excluded(std::string_view relative_path, const std::vector<std::string>& patterns);

std::vector<RelevantFile> find_relevant_files(const std::filesystem::path& workspace, std::string_view import_name,
                                              const ScanOptions& options, std::vector<std::string>* warnings = nullptr);

} // namespace migmate::scanner
