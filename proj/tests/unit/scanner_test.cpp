#include "support.hpp"

#include "migmate/scanner.hpp"

#include <algorithm>

#include <gtest/gtest.h>

using namespace testing_support;
using namespace migmate::scanner;

TEST(Scanner, ImportLinesMatchPythonParser)
{
    auto oracle = load_json(fixtures() / "imports" / "oracle.json");
    for (const auto& [file, by_name] : oracle.items()) {
        auto code = migmate::util::read_file(fixtures() / "imports" / file);
        for (const auto& [name, lines] : by_name.items())
            EXPECT_EQ(find_import_lines(code, name), lines.get<std::vector<std::size_t>>()) << file << " " << name;
    }
}

TEST(Scanner, ImportInsideDocstringIgnored)
{
    std::string code = "\"\"\"\nimport requests\n\"\"\"\nx = 1\n";
    EXPECT_TRUE(find_import_lines(code, "requests").empty());
}

TEST(Scanner, ParenthesizedFromImport)
{
    std::string code = "from requests import (\n    Session,\n    get,\n)\n";
    EXPECT_EQ(find_import_lines(code, "requests"), std::vector<std::size_t>{1});
}

TEST(Scanner, ImportNameOverrides)
{
    EXPECT_EQ(import_name_for("requests", {}), "requests");
    EXPECT_EQ(import_name_for("beautifulsoup4", {{"beautifulsoup4", "bs4"}}), "bs4");
    EXPECT_EQ(import_name_for("typing-extensions", {}), "typing_extensions");
    EXPECT_EQ(import_name_for("Flask-Login", {}), "flask_login");
    EXPECT_EQ(import_name_for("Beautifulsoup4", {{"beautifulsoup4", "bs4"}}), "bs4");
}

TEST(Scanner, TestPathDetection)
{
    EXPECT_TRUE(is_test_path("tests/test_api.py"));
    EXPECT_TRUE(is_test_path("conftest.py"));
    EXPECT_TRUE(is_test_path("pkg/api_test.py"));
    EXPECT_TRUE(is_test_path("pkg/test/helpers.py"));
    EXPECT_FALSE(is_test_path("shop/api.py"));
    EXPECT_FALSE(is_test_path("shop/testing_utils.py"));
}

TEST(Scanner, ExcludePatterns)
{
    EXPECT_TRUE(is_excluded("build/lib/x.py", {"build/*"}));
    EXPECT_TRUE(is_excluded("pkg/generated_pb2.py", {"*_pb2.py"}));
    EXPECT_FALSE(is_excluded("pkg/api.py", {"build/*"}));
}

TEST(Scanner, FindsFixtureFiles)
{
    std::vector<std::string> warnings;
    auto files = find_relevant_files(fixtures() / "shop", "requests", {}, &warnings);
    std::vector<std::string> paths;
    for (const auto& f : files)
        paths.push_back(f.path);
    EXPECT_EQ(paths, (std::vector<std::string>{"shop/api.py", "shop/client.py", "tests/conftest.py"}));
    EXPECT_FALSE(files[0].is_test);
    EXPECT_TRUE(files[2].is_test);
    EXPECT_EQ(files[0].import_lines, std::vector<std::size_t>{2});
}

TEST(Scanner, SkipsDefaultAndConfiguredExcludes)
{
    TempDir dir("scan");
    for (const char* rel : {"app.py", ".venv/lib/site.py", "env/x.py", "dist/y.py", "pkg.egg-info/z.py", "build/gen.py", "generated/gen.py", ".migmate/a.py",
                            "work/b.py", "pkg/__pycache__/c.py"}) {
        std::filesystem::create_directories((dir / rel).parent_path());
        migmate::util::write_file_atomic(dir / rel, "import requests\n");
    }
    ScanOptions opts;
    opts.excludes = {"generated/*"};
    opts.workdir = dir / "work";
    auto files = find_relevant_files(dir.path(), "requests", opts);
    ASSERT_EQ(files.size(), 1u);
    EXPECT_EQ(files[0].path, "app.py");
    opts.excludes.clear();
    EXPECT_EQ(find_relevant_files(dir.path(), "requests", opts).size(), 2u);
}

TEST(Scanner, ExtraExcludesNeverAddFiles)
{
    auto base = find_relevant_files(fixtures() / "shop", "requests", {});
    for (const char* pattern : {"*", "shop/*", "tests/*", "*.py", "conftest.py", "nothing"}) {
        ScanOptions opts;
        opts.excludes = {pattern};
        auto narrowed = find_relevant_files(fixtures() / "shop", "requests", opts);
        EXPECT_LE(narrowed.size(), base.size()) << pattern;
        for (const auto& f : narrowed)
            EXPECT_TRUE(std::any_of(base.begin(), base.end(), [&](const RelevantFile& b) { return b.path == f.path; }));
    }
    auto again = find_relevant_files(fixtures() / "shop", "requests", {});
    ASSERT_EQ(again.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i)
        EXPECT_EQ(again[i].path, base[i].path);
}

TEST(Scanner, UndecodableFileWarns)
{
    TempDir dir("scan");
    migmate::util::write_file_atomic(dir / "bad.py", std::string("import requests\n\xff\xfe\x00", 19));
    migmate::util::write_file_atomic(dir / "good.py", "import requests\n");
    std::vector<std::string> warnings;
    auto files = find_relevant_files(dir.path(), "requests", {}, &warnings);
    ASSERT_EQ(files.size(), 1u);
    EXPECT_EQ(files[0].path, "good.py");
    EXPECT_FALSE(warnings.empty());
}
