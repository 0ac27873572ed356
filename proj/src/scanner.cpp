#include "migmate/scanner.hpp"

#include "migmate/depfile.hpp"
#include "migmate/error.hpp"
#include "migmate/util.hpp"

#include <algorithm>
#include <cctype>

#include <fnmatch.h>

namespace fs = std::filesystem;

namespace migmate::scanner {

const std::vector<std::string>& default_excludes()
{
    static const std::vector<std::string> patterns{
        ".*", "venv", "env", "build", "dist", "*.egg-info", "__pycache__",
    };
    return patterns;
}

std::string import_name_for(std::string_view library, const std::map<std::string, std::string>& overrides)
{
    if (auto it = overrides.find(std::string(library)); it != overrides.end())
        return it->second;
    auto wanted = depfile::normalize_name(library);
    for (const auto& [key, value] : overrides)
        if (depfile::normalize_name(key) == wanted)
            return value;
    std::string name = util::to_lower(library);
    std::replace(name.begin(), name.end(), '-', '_');
    return name;
}

namespace {

bool is_ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

bool module_matches(std::string_view module, std::string_view name)
{
    return module == name || (module.size() > name.size() && module.starts_with(name) && module[name.size()] == '.');
}

std::string_view next_token(std::string_view s, std::size_t& i)
{
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
        ++i;
    if (i >= s.size())
        return {};
    std::size_t start = i;
    if (is_ident_char(s[i]) || s[i] == '.') {
        while (i < s.size() && (is_ident_char(s[i]) || s[i] == '.'))
            ++i;
        return s.substr(start, i - start);
    }
    ++i;
    return s.substr(start, 1);
}

// `stmt` has comments removed and string bodies blanked.
bool statement_imports(std::string_view stmt, std::string_view name)
{
    std::size_t i = 0;
    auto kw = next_token(stmt, i);
    if (kw == "import") {
        for (;;) {
            auto module = next_token(stmt, i);
            if (module.empty() || module == "(")
                return false;
            if (module_matches(module, name))
                return true;
            auto after = next_token(stmt, i);
            if (after == "as") {
                next_token(stmt, i);
                after = next_token(stmt, i);
            }
            if (after != ",")
                return false;
        }
    }
    if (kw == "from") {
        auto module = next_token(stmt, i);
        if (module.empty() || module.front() == '.')
            return false;
        return next_token(stmt, i) == "import" && module_matches(module, name);
    }
    return false;
}

} // namespace

std::vector<std::size_t> find_import_lines(std::string_view content, std::string_view import_name)
{
    std::vector<std::size_t> lines;
    std::string stmt;
    std::size_t line = 1;
    std::size_t stmt_line = 1;
    int depth = 0;
    char quote = 0; // active string delimiter
    bool triple = false;
    bool continued = false;

    auto finish = [&] {
        if (statement_imports(stmt, import_name) &&
            (lines.empty() || lines.back() != stmt_line))
            lines.push_back(stmt_line);
        stmt.clear();
    };

    std::size_t i = 0;
    bool at_start = true;
    while (i < content.size()) {
        char c = content[i];
        if (at_start) {
            stmt_line = line;
            at_start = false;
        }
        if (quote) {
            if (c == '\\' && i + 1 < content.size()) {
                if (content[i + 1] == '\n')
                    ++line;
                i += 2;
                continue;
            }
            if (c == '\n') {
                ++line;
                if (!triple) {
                    // Unterminated single-line string: recover at line end.
                    quote = 0;
                    if (depth == 0) {
                        finish();
                        at_start = true;
                    }
                }
                ++i;
                continue;
            }
            if (c == quote) {
                if (!triple) {
                    quote = 0;
                    ++i;
                    continue;
                }
                if (content.substr(i, 3) == std::string(3, quote)) {
                    quote = 0;
                    triple = false;
                    i += 3;
                    continue;
                }
            }
            ++i;
            continue;
        }
        switch (c) {
        case '#':
            while (i < content.size() && content[i] != '\n')
                ++i;
            continue;
        case '"':
        case '\'':
            quote = c;
            triple = content.substr(i, 3) == std::string(3, c);
            stmt += " \"\" ";
            i += triple ? 3 : 1;
            continue;
        case '(':
        case '[':
        case '{':
            ++depth;
            break;
        case ')':
        case ']':
        case '}':
            if (depth > 0)
                --depth;
            break;
        case '\\':
            if (i + 1 < content.size() && content[i + 1] == '\n') {
                continued = true;
                ++line;
                i += 2;
                stmt += ' ';
                continue;
            }
            break;
        case ';':
            if (depth == 0) {
                finish();
                stmt_line = line;
                ++i;
                continue;
            }
            break;
        case '\n':
            ++line;
            ++i;
            if (depth == 0 && !continued) {
                finish();
                at_start = true;
            } else {
                stmt += ' ';
            }
            continued = false;
            continue;
        default:
            break;
        }
        stmt += c;
        ++i;
    }
    finish();
    return lines;
}

bool is_test_path(std::string_view relative_path)
{
    fs::path p{std::string(relative_path)};
    auto base = p.filename().string();
    if (base == "conftest.py" || base.starts_with("test_") || base.ends_with("_test.py"))
        return true;
    for (const auto& part : p.parent_path())
        if (part == "tests" || part == "test")
            return true;
    return false;
}

bool is_excluded(std::string_view relative_path, const std::vector<std::string>& patterns)
{
    std::string rel(relative_path);
    std::string base = fs::path(rel).filename().string();
    for (const auto& pat : patterns) {
        if (::fnmatch(pat.c_str(), rel.c_str(), 0) == 0 || ::fnmatch(pat.c_str(), base.c_str(), 0) == 0)
            return true;
    }
    return false;
}

std::vector<RelevantFile> find_relevant_files(const fs::path& workspace, std::string_view import_name,
                                              const ScanOptions& options, std::vector<std::string>* warnings)
{
    std::vector<std::string> patterns = default_excludes();
    patterns.insert(patterns.end(), options.excludes.begin(), options.excludes.end());
    std::string workdir_rel;
    if (!options.workdir.empty()) {
        auto rel = fs::weakly_canonical(options.workdir).lexically_relative(fs::weakly_canonical(workspace));
        if (!rel.empty() && *rel.begin() != "..")
            workdir_rel = rel.generic_string();
    }

    std::vector<RelevantFile> found;
    std::error_code ec;
    fs::recursive_directory_iterator it(workspace, fs::directory_options::skip_permission_denied, ec);
    if (ec)
        throw Error(ErrorCode::IoError, "cannot scan " + workspace.string(), workspace.string());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            if (warnings)
                warnings->push_back("scan error: " + ec.message());
            ec.clear();
            continue;
        }
        const auto& entry = *it;
        std::string rel = util::relative_generic(entry.path(), workspace);
        bool is_dir = entry.is_directory(ec);
        if (is_dir) {
            if (is_excluded(rel, patterns) || (!workdir_rel.empty() && rel == workdir_rel))
                it.disable_recursion_pending();
            continue;
        }
        if (entry.path().extension() != ".py" || !entry.is_regular_file(ec) || is_excluded(rel, patterns))
            continue;
        std::string content;
        try {
            content = util::read_file(entry.path());
        } catch (const Error& e) {
            if (warnings)
                warnings->push_back(e.what());
            continue;
        }
        if (!util::is_valid_utf8(content)) {
            if (warnings)
                warnings->push_back(rel + ": not valid UTF-8, skipped");
            continue;
        }
        auto lines = find_import_lines(content, import_name);
        if (lines.empty())
            continue;
        found.push_back(RelevantFile{rel, std::move(lines), std::move(content), is_test_path(rel)});
    }
    std::sort(found.begin(), found.end(), [](const RelevantFile& a, const RelevantFile& b) { return a.path < b.path; });
    return found;
}

} // namespace migmate::scanner
