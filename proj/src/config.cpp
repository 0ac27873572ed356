#include "migmate/config.hpp"

#include "migmate/error.hpp"
#include "migmate/toml_lite.hpp"
#include "migmate/util.hpp"

#include <algorithm>
#include <cstdlib>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace migmate::config {

const std::vector<KeySpec>& keys()
{
    static const std::vector<KeySpec> all = {
        {"llm", ValueType::String, "Model name sent to the chat-completion endpoint (default gpt-4o-mini)"},
        {"base-url", ValueType::String, "Chat-completion endpoint base URL"},
        {"api-key-env", ValueType::String, "Environment variable holding the API key (default OPENAI_API_KEY)"},
        {"temperature", ValueType::Number, "Sampling temperature (default 0)"},
        {"max-retries", ValueType::Int, "Retries on transient transport failures (default 3)"},
        {"llm-timeout", ValueType::Number, "Seconds to wait for one model reply (default 120)"},
        {"token-budget", ValueType::Int, "Largest prompt, in estimated tokens, sent for one file"},
        {"test-cmd", ValueType::String, "Test command; {report} becomes the JUnit XML path"},
        {"test-timeout", ValueType::Number, "Seconds before a test run is cut off (default 600)"},
        {"syntax-check-cmd", ValueType::String, "Syntax validator; {file} becomes the file path"},
        {"workdir", ValueType::String, "Work directory for sessions (default <workspace>/.migmate)"},
        {"mock-llm", ValueType::String, "Use a scripted transcript instead of a live model"},
        {"apply-mode", ValueType::String, "interactive, all or none once the pipeline finishes"},
        {"preview-style", ValueType::String, "incremental (apply as you go) or bulk (one edit at the end)"},
        {"show-preview-on-failure", ValueType::Bool, "Offer the preview when tests regressed (default true)"},
        {"serve", ValueType::Bool, "Also start the review service while migrating"},
        {"port", ValueType::Int, "Review service port (default 8765)"},
        {"force", ValueType::Bool, "Reclaim a stale workspace lock"},
        {"include-tests", ValueType::Bool, "Send test files to the model as well"},
        {"strict-compare", ValueType::Bool, "Count pass->skip and vanished tests as regressions"},
        {"target-spec", ValueType::String, "Version specifier written for the target, e.g. '>=0.27'"},
        {"context-lines", ValueType::Int, "Context lines around each hunk (default 3)"},
        {"scan-exclude", ValueType::List, "Extra glob patterns excluded from scanning"},
        {"import-names", ValueType::Map, "Distribution-to-import name overrides, e.g. beautifulsoup4=bs4"},
        {"elision-phrases", ValueType::List, "Comment phrases that mark omitted code"},
    };
    return all;
}

const KeySpec* find_key(std::string_view name)
{
    for (const auto& k : keys())
        if (k.name == name)
            return &k;
    return nullptr;
}

namespace {

std::string dashed(std::string_view s)
{
    std::string out(s);
    std::replace(out.begin(), out.end(), '_', '-');
    return util::to_lower(out);
}

json toml_to_json(const toml::Value& v)
{
    switch (v.kind) {
    case toml::Kind::String:
    case toml::Kind::Datetime: return v.text;
    case toml::Kind::Integer: {
        std::string digits;
        for (char c : v.text)
            if (c != '_')
                digits += c;
        return std::stoll(digits, nullptr, 0);
    }
    case toml::Kind::Float: return std::stod(util::replace_all(v.text, "_", ""));
    case toml::Kind::Boolean: return v.text == "true";
    case toml::Kind::Array: {
        json a = json::array();
        for (const auto& item : v.items)
            a.push_back(toml_to_json(item));
        return a;
    }
    case toml::Kind::Table: {
        json o = json::object();
        for (const auto& [k, f] : v.fields)
            o[k] = toml_to_json(f);
        return o;
    }
    }
    return nullptr;
}

void flatten(const toml::Value& table, const std::string& prefix, Layer& out)
{
    for (const auto& [k, v] : table.fields) {
        std::string name = prefix + dashed(k);
        if (const KeySpec* key = find_key(name)) {
            out[name] = coerce(*key, toml_to_json(v));
        } else if (v.is_table()) {
            flatten(v, name + "-", out);
        } else {
            throw Error(ErrorCode::InvalidConfig, "unknown key '" + name + "' in " + kConfigFileName, name);
        }
    }
}

bool parse_bool(const std::string& text, const std::string& key)
{
    std::string t = util::to_lower(util::trim(text));
    if (t == "true" || t == "1" || t == "yes" || t == "on")
        return true;
    if (t == "false" || t == "0" || t == "no" || t == "off")
        return false;
    throw Error(ErrorCode::InvalidConfig, key + " expects true or false, got '" + text + "'", key);
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string::npos)
            end = text.size();
        auto item = util::trim(std::string_view(text).substr(start, end - start));
        if (!item.empty())
            out.emplace_back(item);
        start = end + 1;
    }
    return out;
}

} // namespace

json coerce(const KeySpec& key, const json& value)
{
    auto bad = [&](const char* expected) {
        return Error(ErrorCode::InvalidConfig, key.name + " expects " + expected + ", got " + value.dump(), key.name);
    };
    switch (key.type) {
    case ValueType::String:
        if (value.is_string())
            return value;
        if (value.is_number() || value.is_boolean())
            return value.dump();
        throw bad("a string");
    case ValueType::Bool:
        if (value.is_boolean())
            return value;
        if (value.is_string())
            return parse_bool(value.get<std::string>(), key.name);
        throw bad("true or false");
    case ValueType::Int:
        if (value.is_number_integer())
            return value;
        if (value.is_string()) {
            const std::string s(util::trim(value.get<std::string>()));
            std::size_t used = 0;
            try {
                long long n = std::stoll(s, &used);
                if (used == s.size())
                    return n;
            } catch (const std::exception&) {
            }
        }
        throw bad("an integer");
    case ValueType::Number:
        if (value.is_number())
            return value;
        if (value.is_string()) {
            const std::string s(util::trim(value.get<std::string>()));
            std::size_t used = 0;
            try {
                double d = std::stod(s, &used);
                if (used == s.size())
                    return d;
            } catch (const std::exception&) {
            }
        }
        throw bad("a number");
    case ValueType::List:
        if (value.is_string())
            return split_list(value.get<std::string>());
        if (value.is_array() && std::all_of(value.begin(), value.end(), [](const json& x) { return x.is_string(); }))
            return value;
        throw bad("a list of strings");
    case ValueType::Map:
        if (value.is_string()) {
            json m = json::object();
            for (const auto& pair : split_list(value.get<std::string>())) {
                auto eq = pair.find('=');
                if (eq == std::string::npos)
                    throw bad("name=value pairs");
                m[std::string(util::trim(pair.substr(0, eq)))] = std::string(util::trim(pair.substr(eq + 1)));
            }
            return m;
        }
        if (value.is_object() && std::all_of(value.begin(), value.end(), [](const json& x) { return x.is_string(); }))
            return value;
        throw bad("a table of strings");
    }
    throw bad("a value");
}

Layer parse_file_layer(std::string_view toml_text)
{
    Layer out;
    flatten(toml::parse(toml_text), "", out);
    return out;
}

Layer file_layer(const fs::path& workspace)
{
    fs::path path = workspace / kConfigFileName;
    if (!fs::exists(path))
        return {};
    try {
        return parse_file_layer(util::read_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidToml)
            throw Error(ErrorCode::InvalidToml, std::string(kConfigFileName) + ": " + e.what(), path.string());
        throw;
    }
}

EnvLookup process_env()
{
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v)
            return std::nullopt;
        return std::string(v);
    };
}

Layer env_layer(const EnvLookup& env)
{
    Layer out;
    if (auto v = env("OPENAI_BASE_URL"); v && !v->empty())
        out["base-url"] = *v;
    for (const auto& key : keys()) {
        std::string var = "MIGMATE_" + key.name;
        std::transform(var.begin(), var.end(), var.begin(), [](char c) {
            return c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        });
        if (auto v = env(var); v && !v->empty())
            out[key.name] = coerce(key, *v);
    }
    return out;
}

CliConfig resolve(const Layer& file, const Layer& env, const Layer& flags, bool interactive_default)
{
    CliConfig cfg;
    Layer merged;
    for (const auto& [layer, name] :
         {std::pair{&file, "file"}, std::pair{&env, "env"}, std::pair{&flags, "flag"}}) {
        for (const auto& [k, v] : *layer) {
            const KeySpec* key = find_key(k);
            if (!key)
                throw Error(ErrorCode::InvalidConfig, "unknown configuration key '" + k + "'", k);
            merged[k] = coerce(*key, v);
            cfg.origin[k] = name;
        }
    }

    auto& o = cfg.options;
    o.apply_mode = interactive_default ? ApplyMode::Interactive : ApplyMode::None;
    for (const auto& key : keys())
        if (!merged.count(key.name))
            cfg.origin[key.name] = "default";

    auto str = [&](const char* k) { return merged.at(k).get<std::string>(); };
    for (const auto& [k, v] : merged) {
        if (k == "llm")
            o.llm.model = str("llm");
        else if (k == "base-url")
            o.llm.base_url = str("base-url");
        else if (k == "api-key-env")
            o.llm.api_key_env = str("api-key-env");
        else if (k == "temperature")
            o.llm.temperature = v.get<double>();
        else if (k == "max-retries")
            o.llm.max_retries = v.get<int>();
        else if (k == "llm-timeout")
            o.llm.timeout_seconds = v.get<double>();
        else if (k == "token-budget") {
            if (v.get<long long>() <= 0)
                throw Error(ErrorCode::InvalidConfig, "token-budget must be positive", k);
            o.llm.token_budget = v.get<std::size_t>();
        } else if (k == "test-cmd")
            o.test_command = str("test-cmd");
        else if (k == "test-timeout")
            o.test_timeout_seconds = v.get<double>();
        else if (k == "syntax-check-cmd")
            o.syntax_check_command = str("syntax-check-cmd");
        else if (k == "workdir")
            cfg.workdir = fs::path(str("workdir"));
        else if (k == "mock-llm")
            o.mock_llm = str("mock-llm");
        else if (k == "apply-mode")
            o.apply_mode = apply_mode_from_string(str("apply-mode"));
        else if (k == "preview-style")
            o.preview_style = preview_style_from_string(str("preview-style"));
        else if (k == "show-preview-on-failure")
            o.show_preview_on_failure = v.get<bool>();
        else if (k == "serve")
            cfg.serve = v.get<bool>();
        else if (k == "port") {
            long long p = v.get<long long>();
            if (p < 0 || p > 65535)
                throw Error(ErrorCode::InvalidConfig, "port must be between 0 and 65535", k);
            cfg.port = static_cast<int>(p);
        } else if (k == "force")
            cfg.force = v.get<bool>();
        else if (k == "include-tests")
            o.include_tests = v.get<bool>();
        else if (k == "strict-compare")
            o.strict_compare = v.get<bool>();
        else if (k == "target-spec")
            o.target_spec = str("target-spec");
        else if (k == "context-lines") {
            if (v.get<long long>() < 0)
                throw Error(ErrorCode::InvalidConfig, "context-lines must not be negative", k);
            o.context_lines = v.get<std::size_t>();
        } else if (k == "scan-exclude")
            o.scan_excludes = v.get<std::vector<std::string>>();
        else if (k == "import-names")
            o.import_names = v.get<std::map<std::string, std::string>>();
        else if (k == "elision-phrases")
            o.elision_phrases = v.get<std::vector<std::string>>();
    }
    if (cfg.workdir && cfg.workdir->empty())
        cfg.workdir.reset();
    if (o.mock_llm && o.mock_llm->empty())
        o.mock_llm.reset();
    return cfg;
}

} // namespace migmate::config
