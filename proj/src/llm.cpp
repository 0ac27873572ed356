#include "migmate/llm.hpp"

#include "migmate/error.hpp"
#include "migmate/util.hpp"

#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

using json = nlohmann::json;

namespace migmate::llm {

void LlmConfig::validate() const
{
    if (model.empty())
        throw Error(ErrorCode::InvalidConfig, "llm model name must not be empty");
    if (max_retries < 0)
        throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
    if (!(temperature >= 0 && temperature <= 2))
        throw Error(ErrorCode::InvalidConfig, "temperature must be between 0 and 2");
    if (!(timeout_seconds > 0))
        throw Error(ErrorCode::InvalidConfig, "llm timeout must be > 0");
}

const std::vector<std::string>& default_elision_phrases()
{
    static const std::vector<std::string> phrases{
        "rest of the code", "remaining code", "unchanged", "same as before",
    };
    return phrases;
}

bool is_elision_marker(std::string_view line, const std::vector<std::string>& phrases)
{
    auto s = util::trim(line);
    if (s == "..." || s == "# ..." || s == "#...")
        return true;
    if (!s.starts_with('#'))
        return false;
    auto lowered = util::to_lower(s);
    for (const auto& p : phrases)
        if (!p.empty() && lowered.find(util::to_lower(p)) != std::string::npos)
            return true;
    return false;
}

bool contains_elision(std::string_view code, const std::vector<std::string>& phrases)
{
    for (const auto& line : util::split_lines_keep(code))
        if (is_elision_marker(line, phrases))
            return true;
    return false;
}

const std::string& system_preamble()
{
    static const std::string text =
        "You are an expert Python developer performing a library migration. "
        "You will receive one complete Python source file together with a source library and a target library. "
        "Rewrite the file so that every usage of the source library (imports, calls, classes, exceptions, "
        "configuration) uses the equivalent API of the target library instead. "
        "Preserve the program's behavior exactly. Do not rename, reorder, reformat, or refactor anything that "
        "is unrelated to the migration. Return the complete migrated file, with no part omitted, in a single "
        "fenced code block and nothing else.";
    return text;
}

namespace {

std::string fence_for(std::string_view content)
{
    std::string fence = "```";
    while (content.find(fence) != std::string_view::npos)
        fence += '`';
    return fence;
}

} // namespace

std::string MigrationPrompt::user_message() const
{
    std::string fence = fence_for(file_content);
    std::ostringstream out;
    out << "Migrate the following Python file from the library `" << source_lib << "` to the library `"
        << target_lib << "`.\n"
        << "- Replace every usage of `" << source_lib << "` with the equivalent `" << target_lib << "` API.\n"
        << "- Preserve behavior and change nothing unrelated to the migration.\n"
        << "- Return the complete file in one fenced code block.\n\n"
        << "File: " << file_path << "\n"
        << fence << "python\n"
        << file_content;
    if (!file_content.empty() && file_content.back() != '\n')
        out << '\n';
    out << fence << "\n";
    return out.str();
}

std::size_t MigrationPrompt::estimated_tokens() const
{
    return (system_preamble.size() + user_message().size() + 3) / 4;
}

MigrationPrompt build_prompt(std::string_view source, std::string_view target, const scanner::RelevantFile& file)
{
    return MigrationPrompt{std::string(source), std::string(target), file.path, file.content, system_preamble()};
}

Extracted extract_code(std::string_view raw, const std::vector<std::string>& phrases)
{
    if (util::trim(raw).empty())
        throw Error(ErrorCode::EmptyResponse, "empty model response");
    auto lines = util::split_lines_keep(raw);
    std::optional<std::string> best;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view l = util::trim(lines[i]);
        if (!l.starts_with("```"))
            continue;
        std::size_t ticks = 0;
        while (ticks < l.size() && l[ticks] == '`')
            ++ticks;
        std::string block;
        std::size_t j = i + 1;
        for (; j < lines.size(); ++j) {
            std::string_view c = util::trim(lines[j]);
            if (c.size() >= ticks && c.find_first_not_of('`') == std::string_view::npos)
                break;
            block += lines[j];
            if (block.back() != '\n')
                block += '\n';
        }
        if (!best || block.size() > best->size())
            best = std::move(block);
        i = j;
    }
    Extracted out;
    out.code = best ? *best : std::string(raw);
    out.elided = contains_elision(out.code, phrases);
    return out;
}

std::string resolve_api_key(const LlmConfig& config)
{
    const char* v = std::getenv(config.api_key_env.c_str());
    if (!v || !*v)
        throw Error(ErrorCode::MissingApiKey,
                    "environment variable " + config.api_key_env + " is not set (required for the OpenAI backend)",
                    config.api_key_env);
    return v;
}

OpenAiBackend::OpenAiBackend(const LlmConfig& config) : api_key_(resolve_api_key(config)) {}

namespace {

struct Endpoint {
    std::string origin; // scheme://host[:port]
    std::string path_prefix;
};

Endpoint split_url(const std::string& url)
{
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::InvalidConfig, "invalid base URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = url.substr(0, path_start);
    ep.path_prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/')
        ep.path_prefix.pop_back();
    return ep;
}

} // namespace

BackendReply OpenAiBackend::send(const LlmConfig& config, const MigrationPrompt& prompt)
{
    auto ep = split_url(config.base_url);
    httplib::Client client(ep.origin);
    auto secs = static_cast<time_t>(config.timeout_seconds);
    auto usecs = static_cast<time_t>((config.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    json body = {
        {"model", config.model},
        {"temperature", config.temperature},
        {"messages",
         json::array({{{"role", "system"}, {"content", prompt.system_preamble}},
                      {{"role", "user"}, {"content", prompt.user_message()}}})},
    };
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    auto res = client.Post(ep.path_prefix + "/chat/completions", headers, body.dump(), "application/json");
    if (!res)
        throw Error(ErrorCode::TransportError, "request to " + ep.origin + " failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403)
        throw Error(ErrorCode::AuthFailed, "endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
    if (res->status == 429 || res->status >= 500)
        throw Error(ErrorCode::TransportError, "transient HTTP " + std::to_string(res->status));
    if (res->status != 200)
        throw Error(ErrorCode::ModelRefusal, "HTTP " + std::to_string(res->status) + " from chat endpoint",
                    res->body.substr(0, 500));

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded())
        throw Error(ErrorCode::TransportError, "malformed JSON from chat endpoint");
    BackendReply out;
    const auto& choices = reply.value("choices", json::array());
    if (!choices.is_array() || choices.empty())
        throw Error(ErrorCode::ModelRefusal, "response has no choices");
    const auto& message = choices[0].value("message", json::object());
    if (message.contains("refusal") && message["refusal"].is_string())
        throw Error(ErrorCode::ModelRefusal, "model refused: " + message["refusal"].get<std::string>());
    if (!message.contains("content") || !message["content"].is_string())
        throw Error(ErrorCode::ModelRefusal, "response message has no content");
    out.content = message["content"].get<std::string>();
    if (reply.contains("usage") && reply["usage"].is_object()) {
        const auto& u = reply["usage"];
        out.usage = Usage{u.value("prompt_tokens", 0L), u.value("completion_tokens", 0L), u.value("total_tokens", 0L)};
    }
    return out;
}

Transcript parse_transcript(std::string_view text)
{
    Transcript t;
    std::optional<std::string> current;
    std::string content;
    for (const auto& line : util::split_lines_keep(text)) {
        std::string_view l = line;
        if (!l.empty() && l.back() == '\n')
            l.remove_suffix(1);
        if (!current) {
            if (l.starts_with("@@@ file:"))
                current = std::string(util::trim(l.substr(9)));
            continue;
        }
        if (l == "@@@ end" || l == "@@@ end noeol") {
            if (l == "@@@ end noeol" && !content.empty() && content.back() == '\n')
                content.pop_back();
            t[*current] = std::move(content);
            content.clear();
            current.reset();
            continue;
        }
        content += line;
    }
    if (current)
        throw Error(ErrorCode::InvalidConfig, "transcript block for " + *current + " lacks '@@@ end'", *current);
    return t;
}

Transcript load_transcript(const std::filesystem::path& path)
{
    return parse_transcript(util::read_file(path));
}

BackendReply MockBackend::send(const LlmConfig&, const MigrationPrompt& prompt)
{
    auto it = transcript_.find(prompt.file_path);
    if (it == transcript_.end())
        throw Error(ErrorCode::MockTranscriptMiss, "mock transcript has no entry for " + prompt.file_path,
                    prompt.file_path);
    return BackendReply{it->second, std::nullopt};
}

LlmResponse complete(const LlmConfig& config, const MigrationPrompt& prompt, ChatBackend& backend, const LogSink& log,
                     const std::vector<std::string>& elision_phrases)
{
    config.validate();
    auto tokens = prompt.estimated_tokens();
    if (tokens > config.token_budget)
        throw Error(ErrorCode::FileTooLarge,
                    prompt.file_path + " needs ~" + std::to_string(tokens) + " prompt tokens (budget " +
                        std::to_string(config.token_budget) + ")",
                    prompt.file_path);

    auto note = [&](const std::string& s) {
        if (log)
            log(s);
    };
    BackendReply reply;
    for (int attempt = 0;; ++attempt) {
        auto started = std::chrono::steady_clock::now();
        note("llm request: backend=" + backend.name() + " model=" + config.model + " file=" + prompt.file_path +
             " attempt=" + std::to_string(attempt + 1) + " ~tokens=" + std::to_string(tokens));
        try {
            reply = backend.send(config, prompt);
            auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
            std::string usage;
            if (reply.usage)
                usage = " usage(prompt=" + std::to_string(reply.usage->prompt_tokens) +
                        ",completion=" + std::to_string(reply.usage->completion_tokens) + ")";
            note("llm response: file=" + prompt.file_path + " bytes=" + std::to_string(reply.content.size()) +
                 " elapsed_ms=" + std::to_string(ms.count()) + usage);
            break;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::TransportError || attempt >= config.max_retries) {
                note(std::string("llm error: file=") + prompt.file_path + " " + e.what());
                if (e.code() == ErrorCode::TransportError)
                    throw Error(ErrorCode::TransportError,
                                std::string(e.what()) + " (after " + std::to_string(attempt + 1) + " attempts)",
                                prompt.file_path);
                throw;
            }
            auto delay = config.retry_backoff * (1LL << attempt);
            note(std::string("llm transient failure: ") + e.what() + "; retrying in " +
                 std::to_string(delay.count()) + " ms");
            std::this_thread::sleep_for(delay);
        }
    }

    if (util::trim(reply.content).empty())
        throw Error(ErrorCode::ModelRefusal, "model returned no usable content for " + prompt.file_path,
                    prompt.file_path);
    auto extracted = extract_code(reply.content, elision_phrases);
    if (util::trim(extracted.code).empty())
        throw Error(ErrorCode::ModelRefusal, "model returned an empty code block for " + prompt.file_path,
                    prompt.file_path);
    return LlmResponse{std::move(reply.content), std::move(extracted.code), reply.usage, extracted.elided};
}

} // namespace migmate::llm
