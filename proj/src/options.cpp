#include "migmate/options.hpp"

#include "migmate/error.hpp"

using json = nlohmann::json;

namespace migmate {

std::string_view to_string(PreviewStyle s)
{
    return s == PreviewStyle::Incremental ? "incremental" : "bulk";
}

std::string_view to_string(ApplyMode m)
{
    switch (m) {
    case ApplyMode::Interactive: return "interactive";
    case ApplyMode::All: return "all";
    case ApplyMode::None: return "none";
    }
    return "none";
}

PreviewStyle preview_style_from_string(std::string_view s)
{
    if (s == "incremental" || s == "webview")
        return PreviewStyle::Incremental;
    if (s == "bulk" || s == "refactor")
        return PreviewStyle::Bulk;
    throw Error(ErrorCode::InvalidConfig, "preview style must be 'incremental' or 'bulk', got '" + std::string(s) + "'");
}

ApplyMode apply_mode_from_string(std::string_view s)
{
    if (s == "interactive")
        return ApplyMode::Interactive;
    if (s == "all")
        return ApplyMode::All;
    if (s == "none")
        return ApplyMode::None;
    throw Error(ErrorCode::InvalidConfig, "apply mode must be interactive, all or none, got '" + std::string(s) + "'");
}

json to_json(const MigrationOptions& o)
{
    json j{
        {"source", o.source},
        {"target", o.target},
        {"target_spec", o.target_spec ? json(*o.target_spec) : json(nullptr)},
        {"llm",
         {{"model", o.llm.model},
          {"base_url", o.llm.base_url},
          {"api_key_env", o.llm.api_key_env},
          {"temperature", o.llm.temperature},
          {"max_retries", o.llm.max_retries},
          {"timeout", o.llm.timeout_seconds},
          {"retry_backoff_ms", o.llm.retry_backoff.count()},
          {"token_budget", o.llm.token_budget}}},
        {"test_command", o.test_command},
        {"test_timeout", o.test_timeout_seconds},
        {"syntax_check_command", o.syntax_check_command},
        {"preview_style", std::string(to_string(o.preview_style))},
        {"show_preview_on_failure", o.show_preview_on_failure},
        {"apply_mode", std::string(to_string(o.apply_mode))},
        {"include_tests", o.include_tests},
        {"strict_compare", o.strict_compare},
        {"mock_llm", o.mock_llm ? json(*o.mock_llm) : json(nullptr)},
        {"scan_exclude", o.scan_excludes},
        {"import_names", o.import_names},
        {"elision_phrases", o.elision_phrases},
        {"context_lines", o.context_lines},
        {"trigger", o.trigger},
    };
    return j;
}

MigrationOptions options_from_json(const json& j)
{
    MigrationOptions o;
    o.source = j.at("source").get<std::string>();
    o.target = j.at("target").get<std::string>();
    if (j.contains("target_spec") && j["target_spec"].is_string())
        o.target_spec = j["target_spec"].get<std::string>();
    const auto& l = j.at("llm");
    o.llm.model = l.at("model").get<std::string>();
    o.llm.base_url = l.at("base_url").get<std::string>();
    o.llm.api_key_env = l.at("api_key_env").get<std::string>();
    o.llm.temperature = l.at("temperature").get<double>();
    o.llm.max_retries = l.at("max_retries").get<int>();
    o.llm.timeout_seconds = l.at("timeout").get<double>();
    o.llm.retry_backoff = std::chrono::milliseconds(l.value("retry_backoff_ms", 1000LL));
    o.llm.token_budget = l.value("token_budget", o.llm.token_budget);
    o.test_command = j.at("test_command").get<std::string>();
    o.test_timeout_seconds = j.at("test_timeout").get<double>();
    o.syntax_check_command = j.at("syntax_check_command").get<std::string>();
    o.preview_style = preview_style_from_string(j.at("preview_style").get<std::string>());
    o.show_preview_on_failure = j.at("show_preview_on_failure").get<bool>();
    o.apply_mode = apply_mode_from_string(j.at("apply_mode").get<std::string>());
    o.include_tests = j.at("include_tests").get<bool>();
    o.strict_compare = j.at("strict_compare").get<bool>();
    if (j.contains("mock_llm") && j["mock_llm"].is_string())
        o.mock_llm = j["mock_llm"].get<std::string>();
    o.scan_excludes = j.at("scan_exclude").get<std::vector<std::string>>();
    o.import_names = j.at("import_names").get<std::map<std::string, std::string>>();
    o.elision_phrases = j.at("elision_phrases").get<std::vector<std::string>>();
    o.context_lines = j.at("context_lines").get<std::size_t>();
    o.trigger = j.value("trigger", std::string("cli"));
    return o;
}

} // namespace migmate
