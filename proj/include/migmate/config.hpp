#pragma once

#include "migmate/options.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace migmate::config {

enum class ValueType { String, Bool, Int, Number, List, Map };

struct KeySpec {
    std::string name; // flag spelling without dashes, e.g. "test-cmd"
    ValueType type;
    std::string help;
};

/// Every configurable key. Flags, `.migmate.toml` keys and MIGMATE_* variables share these names.
const std::vector<KeySpec>& keys();
const KeySpec* find_key(std::string_view name);

/// Key -> value as read from one layer; values are already typed.
using Layer = std::map<std::string, nlohmann::json>;

inline constexpr const char* kConfigFileName = ".migmate.toml";

/// Reads `.migmate.toml` from the workspace root (empty when absent).
/// Table keys flatten with '-', so `[scan] exclude` is `scan-exclude`.
Layer file_layer(const std::filesystem::path& workspace);
Layer parse_file_layer(std::string_view toml_text);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// MIGMATE_<KEY> for every key (dashes become underscores), plus OPENAI_BASE_URL.
Layer env_layer(const EnvLookup& env);

/// Converts a textual flag or env value to the key's type. Throws InvalidConfig.
nlohmann::json coerce(const KeySpec& key, const nlohmann::json& value);

struct CliConfig {
    MigrationOptions options;
    std::optional<std::filesystem::path> workdir;
    int port = 8765;
    bool serve = false;
    bool force = false;
    /// Key -> "default" | "file" | "env" | "flag" for every key that was set.
    nlohmann::json origin = nlohmann::json::object();
};

/// defaults < file < env < flags. `interactive_default` picks the apply-mode default.
CliConfig resolve(const Layer& file, const Layer& env, const Layer& flags, bool interactive_default);

} // namespace migmate::config
