#pragma once

#include "migmate/llm.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace migmate {

enum class PreviewStyle { Incremental, Bulk };
enum class ApplyMode { Interactive, All, None };

std::string_view to_string(PreviewStyle s);
std::string_view to_string(ApplyMode m);
PreviewStyle preview_style_from_string(std::string_view s);
ApplyMode apply_mode_from_string(std::string_view s);

/// Everything a pipeline run needs, as resolved from all configuration layers.
struct MigrationOptions {
    std::string source;
    std::string target;
    std::optional<std::string> target_spec;
    llm::LlmConfig llm;
    std::string test_command = "pytest --junitxml={report}";
    double test_timeout_seconds = 600.0;
    std::string syntax_check_command = "python3 -m py_compile {file}";
    PreviewStyle preview_style = PreviewStyle::Incremental;
    bool show_preview_on_failure = true;
    ApplyMode apply_mode = ApplyMode::None;
    bool include_tests = false;
    bool strict_compare = false;
    std::optional<std::string> mock_llm;
    std::vector<std::string> scan_excludes;
    std::map<std::string, std::string> import_names;
    std::vector<std::string> elision_phrases = llm::default_elision_phrases();
    std::size_t context_lines = 3;
    /// How the migration was started: "cli" or "api".
    std::string trigger = "cli";
};

nlohmann::json to_json(const MigrationOptions& o);
MigrationOptions options_from_json(const nlohmann::json& j);

} // namespace migmate
