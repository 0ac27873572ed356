#include "migmate/depfile.hpp"

#include "migmate/error.hpp"
#include "migmate/toml_lite.hpp"
#include "migmate/util.hpp"

#include <algorithm>
#include <cctype>

namespace fs = std::filesystem;

namespace migmate::depfile {

std::string_view to_string(FileKind kind)
{
    return kind == FileKind::Requirements ? "requirements" : "pyproject";
}

std::string normalize_name(std::string_view name)
{
    std::string out;
    out.reserve(name.size());
    bool in_sep = false;
    for (char c : name) {
        if (c == '-' || c == '_' || c == '.') {
            if (!in_sep)
                out += '-';
            in_sep = true;
            continue;
        }
        in_sep = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

const DependencyEntry* DependencyFile::find(std::string_view library) const
{
    auto wanted = normalize_name(library);
    for (const auto& e : entries)
        if (e.name == wanted)
            return &e;
    return nullptr;
}

std::optional<FileKind> kind_for_path(const fs::path& path)
{
    auto name = path.filename().string();
    if (name == "pyproject.toml")
        return FileKind::Pyproject;
    if (name.starts_with("requirements") && name.ends_with(".txt"))
        return FileKind::Requirements;
    return std::nullopt;
}

namespace {

bool is_space(char c)
{
    return c == ' ' || c == '\t';
}

struct Requirement {
    std::size_t name_begin = 0;
    std::size_t name_end = 0;
    std::size_t spec_begin = 0;
    std::size_t spec_end = 0; // == spec_begin when unpinned
    std::size_t replace_end = 0;
};

// PEP 508 subset: name [extras] [specifier] [; marker]. Direct URL references
// (`name @ url`) are treated as unparseable by the caller.
std::optional<Requirement> parse_requirement(std::string_view text, std::string& why)
{
    Requirement r;
    std::size_t i = 0;
    while (i < text.size() && is_space(text[i]))
        ++i;
    if (i >= text.size() || !std::isalnum(static_cast<unsigned char>(text[i]))) {
        why = "expected a distribution name";
        return std::nullopt;
    }
    r.name_begin = i;
    while (i < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '-' || text[i] == '_' || text[i] == '.'))
        ++i;
    r.name_end = i;
    r.replace_end = i;
    std::size_t j = i;
    while (j < text.size() && is_space(text[j]))
        ++j;
    if (j < text.size() && text[j] == '[') {
        auto close = text.find(']', j);
        if (close == std::string_view::npos) {
            why = "unterminated extras";
            return std::nullopt;
        }
        j = close + 1;
        r.replace_end = j;
        while (j < text.size() && is_space(text[j]))
            ++j;
    }
    if (j < text.size() && text[j] == '@') {
        why = "direct URL reference";
        return std::nullopt;
    }
    std::size_t marker = text.find(';', j);
    std::size_t spec_stop = marker == std::string_view::npos ? text.size() : marker;
    std::size_t end = spec_stop;
    while (end > j && is_space(text[end - 1]))
        --end;
    r.spec_begin = j;
    r.spec_end = j;
    if (end > j) {
        char c = text[j];
        if (c != '<' && c != '>' && c != '=' && c != '!' && c != '~' && c != '(') {
            why = "unexpected text after name";
            return std::nullopt;
        }
        r.spec_end = end;
        r.replace_end = end;
    }
    return r;
}

void parse_requirements(DependencyFile& file)
{
    const std::string& raw = file.raw;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool continued = false;
    while (pos < raw.size()) {
        ++line_no;
        std::size_t nl = raw.find('\n', pos);
        std::size_t line_end = nl == std::string::npos ? raw.size() : nl;
        std::string_view line(raw.data() + pos, line_end - pos);
        std::size_t line_start = pos;
        pos = nl == std::string::npos ? raw.size() : nl + 1;

        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        bool continues = !line.empty() && line.back() == '\\';
        if (continued || continues) {
            if (!continued)
                file.warnings.push_back(file.path + ":" + std::to_string(line_no) +
                                        ": line continuation not supported; skipped");
            continued = continues;
            continue;
        }

        // A comment starts at '#' at line start or after whitespace.
        std::size_t comment = std::string_view::npos;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '#' && (i == 0 || is_space(line[i - 1]))) {
                comment = i;
                break;
            }
        }
        std::string_view body = line.substr(0, comment);
        std::size_t first = 0;
        while (first < body.size() && is_space(body[first]))
            ++first;
        if (first == body.size())
            continue;
        std::string_view trimmed = body.substr(first);
        auto warn = [&](const std::string& what) {
            file.warnings.push_back(file.path + ":" + std::to_string(line_no) + ": " + what);
        };
        if (trimmed.front() == '-') {
            warn("option line '" + std::string(util::trim(trimmed)) + "' kept as-is");
            continue;
        }
        if (trimmed.find("://") != std::string_view::npos || trimmed.front() == '.' || trimmed.front() == '/') {
            warn("URL or path requirement kept as-is");
            continue;
        }
        std::string why;
        auto req = parse_requirement(body, why);
        if (!req) {
            warn("unparseable requirement (" + why + ")");
            continue;
        }
        DependencyEntry e;
        e.raw_name = std::string(body.substr(req->name_begin, req->name_end - req->name_begin));
        e.name = normalize_name(e.raw_name);
        if (req->spec_end > req->spec_begin)
            e.version_spec = std::string(body.substr(req->spec_begin, req->spec_end - req->spec_begin));
        e.line = line_no;
        e.file_kind = FileKind::Requirements;
        e.replace_begin = line_start + req->name_begin;
        e.replace_end = line_start + req->replace_end;
        file.entries.push_back(std::move(e));
    }
}

std::size_t line_of(const std::string& raw, std::size_t offset)
{
    return 1 + static_cast<std::size_t>(std::count(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

void collect_array(DependencyFile& file, const toml::Value& array, const std::string& group)
{
    for (const auto& item : array.items) {
        if (!item.is_string()) {
            file.warnings.push_back(file.path + ":" + std::to_string(item.line) + ": non-string dependency in " + group);
            continue;
        }
        std::string_view raw_body(file.raw.data() + item.raw_begin, item.raw_end - item.raw_begin);
        std::size_t line = line_of(file.raw, item.raw_begin);
        if (raw_body != item.text) {
            file.warnings.push_back(file.path + ":" + std::to_string(line) + ": escaped dependency string kept as-is");
            continue;
        }
        std::string why;
        auto req = parse_requirement(raw_body, why);
        if (!req) {
            file.warnings.push_back(file.path + ":" + std::to_string(line) + ": unparseable requirement (" + why + ")");
            continue;
        }
        DependencyEntry e;
        e.raw_name = std::string(raw_body.substr(req->name_begin, req->name_end - req->name_begin));
        e.name = normalize_name(e.raw_name);
        if (req->spec_end > req->spec_begin)
            e.version_spec = std::string(raw_body.substr(req->spec_begin, req->spec_end - req->spec_begin));
        e.line = line_of(file.raw, item.raw_begin + req->name_begin);
        e.file_kind = FileKind::Pyproject;
        e.replace_begin = item.raw_begin + req->name_begin;
        e.replace_end = item.raw_begin + req->replace_end;
        e.group = group;
        file.entries.push_back(std::move(e));
    }
}

void parse_pyproject(DependencyFile& file)
{
    toml::Value doc = toml::parse(file.raw);
    const toml::Value* project = doc.get("project");
    if (!project || !project->is_table())
        return;
    if (const auto* deps = project->get("dependencies"); deps && deps->is_array())
        collect_array(file, *deps, "project.dependencies");
    if (const auto* opt = project->get("optional-dependencies"); opt && opt->is_table()) {
        for (const auto& [group, arr] : opt->fields)
            if (arr.is_array())
                collect_array(file, arr, "project.optional-dependencies." + group);
    }
    std::stable_sort(file.entries.begin(), file.entries.end(),
                     [](const DependencyEntry& a, const DependencyEntry& b) { return a.replace_begin < b.replace_begin; });
}

} // namespace

DependencyFile parse_dependency_file(const std::string& path, std::string_view content)
{
    auto kind = kind_for_path(path);
    if (!kind)
        throw Error(ErrorCode::UnsupportedFileKind, "not a dependency file: " + path, path);
    DependencyFile file;
    file.path = path;
    file.kind = *kind;
    file.raw = std::string(content);
    if (file.kind == FileKind::Requirements)
        parse_requirements(file);
    else
        parse_pyproject(file);
    return file;
}

std::string rewrite_dependency(const DependencyFile& file, std::string_view source, std::string_view target,
                               const std::optional<std::string>& target_spec)
{
    const DependencyEntry* entry = file.find(source);
    if (!entry)
        throw Error(ErrorCode::SourceNotDeclared, std::string(source) + " is not declared in " + file.path,
                    std::string(source));
    std::string replacement(target);
    if (target_spec)
        replacement += *target_spec;
    std::string out;
    out.reserve(file.raw.size() + replacement.size());
    out.append(file.raw, 0, entry->replace_begin);
    out += replacement;
    out.append(file.raw, entry->replace_end, std::string::npos);
    return out;
}

std::vector<DependencyFile> discover(const fs::path& workspace)
{
    std::vector<fs::path> candidates;
    std::error_code ec;
    for (const auto& de : fs::directory_iterator(workspace, ec)) {
        if (de.is_regular_file() && kind_for_path(de.path()))
            candidates.push_back(de.path());
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<DependencyFile> files;
    for (const auto& p : candidates)
        files.push_back(parse_dependency_file(p.filename().string(), util::read_file(p)));
    return files;
}

} // namespace migmate::depfile
