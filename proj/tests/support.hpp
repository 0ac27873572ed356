#pragma once

#include "migmate/process.hpp"
#include "migmate/toml_lite.hpp"
#include "migmate/util.hpp"

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path fixtures() { return MIGMATE_FIXTURES; }
inline fs::path binary() { return MIGMATE_BINARY; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t")
        : path_(fs::temp_directory_path() / ("migmate-" + tag + "-" + migmate::util::random_hex(6)))
    {
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

/// Copies tests/fixtures/<name> to `dest`.
inline void copy_fixture(const std::string& name, const fs::path& dest)
{
    fs::create_directories(dest);
    fs::copy(fixtures() / name, dest, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

/// Path -> bytes for every regular file below `root`, skipping `skip` (relative top-level names).
std::map<std::string, std::string> tree(const fs::path& root, const std::vector<std::string>& skip = {});

/// SHA-256 over the sorted (path, bytes) pairs of tree().
std::string tree_hash(const fs::path& root, const std::vector<std::string>& skip = {});

/// Runs the migmate binary with `args` in `cwd`.
migmate::process::Result run_migmate(const std::string& args, const fs::path& cwd,
                                     const std::string& env_prefix = {});

nlohmann::json load_json(const fs::path& path);

/// Same mapping tomli uses for the value kinds that occur in the fixtures.
nlohmann::json toml_json(const migmate::toml::Value& v);

} // namespace testing_support
