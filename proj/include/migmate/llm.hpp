#pragma once

#include "migmate/scanner.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace migmate::llm {

struct LlmConfig {
    std::string model = "gpt-4o-mini";
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env = "OPENAI_API_KEY";
    double temperature = 0.0;
    int max_retries = 3;
    double timeout_seconds = 120.0;
    /// First backoff delay; doubles on every retry.
    std::chrono::milliseconds retry_backoff{1000};
    /// Rough prompt limit in tokens (bytes / 4).
    std::size_t token_budget = 16000;

    /// Throws InvalidConfig when an invariant does not hold.
    void validate() const;
};

struct MigrationPrompt {
    std::string source_lib;
    std::string target_lib;
    std::string file_path;
    std::string file_content;
    std::string system_preamble;

    std::string user_message() const;
    std::size_t estimated_tokens() const;
};

struct Usage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long total_tokens = 0;
};

struct LlmResponse {
    std::string raw;
    std::string extracted_code;
    std::optional<Usage> usage;
    bool elided = false;
};

/// Case-insensitive phrases that mark a comment line as an elision placeholder.
const std::vector<std::string>& default_elision_phrases();

/// True for comment lines containing one of `phrases`, and for standalone `...` / `# ...`.
bool is_elision_marker(std::string_view line, const std::vector<std::string>& phrases);
bool contains_elision(std::string_view code, const std::vector<std::string>& phrases);

const std::string& system_preamble();

MigrationPrompt build_prompt(std::string_view source, std::string_view target, const scanner::RelevantFile& file);

struct Extracted {
    std::string code;
    bool elided = false;
};

/// Longest fenced block, or `raw` itself when unfenced. Throws EmptyResponse on blank input.
Extracted extract_code(std::string_view raw, const std::vector<std::string>& phrases = default_elision_phrases());

using LogSink = std::function<void(std::string_view)>;

struct BackendReply {
    std::string content;
    std::optional<Usage> usage;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string name() const = 0;
    /// Throws TransportError for failures worth retrying; any other Error is final.
    virtual BackendReply send(const LlmConfig& config, const MigrationPrompt& prompt) = 0;
    virtual bool uses_network() const { return true; }
};

/// Reads the key named by `config.api_key_env`; throws MissingApiKey when unset or empty.
std::string resolve_api_key(const LlmConfig& config);

/// Chat-completions client over HTTP(S).
class OpenAiBackend final : public ChatBackend {
public:
    explicit OpenAiBackend(const LlmConfig& config);
    std::string name() const override { return "openai"; }
    BackendReply send(const LlmConfig& config, const MigrationPrompt& prompt) override;

private:
    std::string api_key_;
};

/// Workspace-relative path -> scripted response text.
using Transcript = std::map<std::string, std::string>;

/// Block format:
///   @@@ file: <path>
///   <content lines>
///   @@@ end            (or `@@@ end noeol` to drop the final newline)
/// Text outside blocks is ignored.
Transcript parse_transcript(std::string_view text);
Transcript load_transcript(const std::filesystem::path& path);

class MockBackend final : public ChatBackend {
public:
    explicit MockBackend(Transcript transcript) : transcript_(std::move(transcript)) {}
    std::string name() const override { return "mock"; }
    BackendReply send(const LlmConfig& config, const MigrationPrompt& prompt) override;
    bool uses_network() const override { return false; }

private:
    Transcript transcript_;
};

/// Sends one prompt with retry/backoff, extracts the code, and logs request metadata.
LlmResponse complete(const LlmConfig& config, const MigrationPrompt& prompt, ChatBackend& backend,
                     const LogSink& log = {},
                     const std::vector<std::string>& elision_phrases = default_elision_phrases());

} // namespace migmate::llm
