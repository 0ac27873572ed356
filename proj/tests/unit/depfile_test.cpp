#include "support.hpp"

#include "migmate/depfile.hpp"
#include "migmate/error.hpp"

#include <algorithm>

#include <gtest/gtest.h>

using namespace testing_support;
using namespace migmate::depfile;
using json = nlohmann::json;

namespace {

json oracle() { return load_json(fixtures() / "depfile_oracle.json"); }

std::vector<std::string> specifiers_of(const DependencyEntry& e)
{
    std::vector<std::string> out;
    if (!e.version_spec)
        return out;
    std::string spec;
    for (char c : *e.version_spec)
        if (c != ' ' && c != '\t')
            spec += c;
    std::size_t start = 0;
    while (start <= spec.size()) {
        auto comma = spec.find(',', start);
        if (comma == std::string::npos)
            comma = spec.size();
        if (comma > start)
            out.push_back(spec.substr(start, comma - start));
        start = comma + 1;
    }
    std::sort(out.begin(), out.end());
    return out;
}

DependencyFile corpus_file(const std::string& name)
{
    auto text = migmate::util::read_file(fixtures() / "depfiles" / name);
    std::string as = name.starts_with("pyproject") ? "pyproject.toml" : name;
    return parse_dependency_file(as, text);
}

std::vector<std::string> split(const std::string& text)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (;;) {
        auto nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            return lines;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
}

} // namespace

TEST(Depfile, NormalizeNameMatchesPackaging)
{
    for (const auto& [raw, canonical] : oracle()["names"].items())
        EXPECT_EQ(normalize_name(raw), canonical.get<std::string>()) << raw;
}

TEST(Depfile, RequirementsEntriesMatchPackaging)
{
    for (const auto& [name, expected] : oracle()["files"].items()) {
        if (expected["kind"] != "requirements")
            continue;
        SCOPED_TRACE(name);
        auto file = corpus_file(name);
        const auto& want = expected["entries"];
        ASSERT_EQ(file.entries.size(), want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            const auto& e = file.entries[i];
            EXPECT_EQ(e.line, want[i]["line"].get<std::size_t>());
            EXPECT_EQ(e.raw_name, want[i]["raw_name"].get<std::string>());
            EXPECT_EQ(e.name, want[i]["name"].get<std::string>());
            EXPECT_EQ(specifiers_of(e), want[i]["specifiers"].get<std::vector<std::string>>());
        }
        for (auto line : expected["continuation_lines"]) {
            auto tag = ":" + std::to_string(line.get<int>()) + ":";
            EXPECT_TRUE(std::any_of(file.warnings.begin(), file.warnings.end(),
                                    [&](const std::string& w) { return w.find(tag) != std::string::npos; }))
                << "no warning for continued line " << line;
        }
    }
}

TEST(Depfile, PyprojectEntriesMatchPackaging)
{
    for (const auto& [name, expected] : oracle()["files"].items()) {
        if (expected["kind"] != "pyproject")
            continue;
        SCOPED_TRACE(name);
        auto file = corpus_file(name);
        std::size_t total = 0;
        for (const auto& [group, want] : expected["groups"].items()) {
            std::vector<const DependencyEntry*> got;
            for (const auto& e : file.entries)
                if (e.group == group)
                    got.push_back(&e);
            ASSERT_EQ(got.size(), want.size()) << group;
            for (std::size_t i = 0; i < want.size(); ++i) {
                EXPECT_EQ(got[i]->raw_name, want[i]["raw_name"].get<std::string>());
                EXPECT_EQ(got[i]->name, want[i]["name"].get<std::string>());
                EXPECT_EQ(specifiers_of(*got[i]), want[i]["specifiers"].get<std::vector<std::string>>());
            }
            total += want.size();
        }
        EXPECT_EQ(file.entries.size(), total);
    }
}

TEST(Depfile, PyprojectLinesAndBuildRequiresIgnored)
{
    auto file = corpus_file("pyproject.toml");
    ASSERT_NE(file.find("requests"), nullptr);
    EXPECT_EQ(file.find("requests")->line, 10u);
    EXPECT_EQ(file.find("typing-extensions")->line, 13u);
    EXPECT_EQ(file.find("sphinx")->line, 19u);
    EXPECT_EQ(file.find("setuptools"), nullptr);
    EXPECT_EQ(file.find("wheel"), nullptr);
}

TEST(Depfile, FindUsesNormalizedNames)
{
    auto file = corpus_file("requirements.txt");
    ASSERT_NE(file.find("flask-login"), nullptr);
    EXPECT_EQ(file.find("FLASK.login"), file.find("flask-login"));
    EXPECT_EQ(file.find("pytest-cov"), nullptr);
}

TEST(Depfile, UnmodifiedRoundTripIsByteIdentical)
{
    for (const auto& de : std::filesystem::directory_iterator(fixtures() / "depfiles")) {
        auto name = de.path().filename().string();
        auto text = migmate::util::read_file(de.path());
        EXPECT_EQ(corpus_file(name).serialize(), text) << name;
    }
}

// Every declared entry, rewritten to a new name, changes exactly its own line.
TEST(Depfile, RewriteChangesExactlyOneLine)
{
    for (const auto& de : std::filesystem::directory_iterator(fixtures() / "depfiles")) {
        auto name = de.path().filename().string();
        auto file = corpus_file(name);
        for (const auto& e : file.entries) {
            for (const std::optional<std::string>& spec : {std::optional<std::string>{}, std::optional<std::string>{">=0.27"}}) {
                SCOPED_TRACE(name + " " + e.raw_name + (spec ? *spec : ""));
                auto out = rewrite_dependency(file, e.raw_name, "httpx", spec);
                auto before = split(file.raw), after = split(out);
                ASSERT_EQ(before.size(), after.size());
                std::vector<std::size_t> changed;
                for (std::size_t i = 0; i < before.size(); ++i)
                    if (before[i] != after[i])
                        changed.push_back(i + 1);
                ASSERT_EQ(changed, std::vector<std::size_t>{e.line});
                auto reparsed = parse_dependency_file(file.path, out);
                const auto* now = reparsed.find("httpx");
                ASSERT_NE(now, nullptr);
                EXPECT_EQ(now->line, e.line);
                EXPECT_EQ(now->version_spec, spec);
            }
        }
    }
}

TEST(Depfile, RewriteKeepsMarkersCommentsAndEol)
{
    auto file = corpus_file("requirements.txt");
    auto out = rewrite_dependency(file, "requests", "httpx", ">=0.27");
    EXPECT_NE(out.find("httpx>=0.27  # http client\n"), std::string::npos);
    auto addr = rewrite_dependency(file, "zope.interface", "zope-component");
    EXPECT_NE(addr.find("zope-component; python_version >= \"3.8\"\n"), std::string::npos);

    auto crlf = corpus_file("requirements-crlf.txt");
    EXPECT_EQ(rewrite_dependency(crlf, "requests", "httpx"), "httpx\r\nhttpx>=0.25\r\n# tail comment\r\n");

    auto noeol = corpus_file("requirements-noeol.txt");
    EXPECT_EQ(rewrite_dependency(noeol, "requests", "httpx"), "click>=8\nhttpx");

    auto py = corpus_file("pyproject.toml");
    auto rewritten = rewrite_dependency(py, "jinja2", "mako", "~=1.3");
    EXPECT_NE(rewritten.find("    'mako~=1.3',\n"), std::string::npos);
}

TEST(Depfile, RewriteUndeclaredThrows)
{
    auto file = corpus_file("requirements.txt");
    try {
        rewrite_dependency(file, "aiohttp", "httpx");
        FAIL();
    } catch (const migmate::Error& e) {
        EXPECT_EQ(e.code(), migmate::ErrorCode::SourceNotDeclared);
    }
}

TEST(Depfile, KindForPath)
{
    EXPECT_EQ(kind_for_path("requirements.txt"), FileKind::Requirements);
    EXPECT_EQ(kind_for_path("requirements-dev.txt"), FileKind::Requirements);
    EXPECT_EQ(kind_for_path("pyproject.toml"), FileKind::Pyproject);
    EXPECT_EQ(kind_for_path("setup.py"), std::nullopt);
    EXPECT_THROW(parse_dependency_file("setup.cfg", ""), migmate::Error);
}

TEST(Depfile, BrokenPyprojectIsInvalidToml)
{
    try {
        parse_dependency_file("pyproject.toml", "[project\nname = 1\n");
        FAIL();
    } catch (const migmate::Error& e) {
        EXPECT_EQ(e.code(), migmate::ErrorCode::InvalidToml);
    }
}

TEST(Depfile, DiscoverFindsRootFilesSorted)
{
    TempDir dir("discover");
    migmate::util::write_file_atomic(dir / "requirements.txt", "requests\n");
    migmate::util::write_file_atomic(dir / "pyproject.toml", "[project]\ndependencies = [\"click\"]\n");
    std::filesystem::create_directories(dir / "sub");
    migmate::util::write_file_atomic(dir / "sub" / "requirements.txt", "numpy\n");
    auto files = discover(dir.path());
    ASSERT_EQ(files.size(), 2u);
    EXPECT_EQ(files[0].path, "pyproject.toml");
    EXPECT_EQ(files[1].path, "requirements.txt");
}
