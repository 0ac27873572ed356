#include "support.hpp"

#include "migmate/error.hpp"
#include "migmate/llm.hpp"

#include <atomic>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

using namespace migmate::llm;
using migmate::ErrorCode;
using json = nlohmann::json;

namespace {

MigrationPrompt prompt_for(const std::string& path, const std::string& content = "import requests\n")
{
    migmate::scanner::RelevantFile f{path, {1}, content, false};
    return build_prompt("requests", "httpx", f);
}

class FlakyBackend : public ChatBackend {
public:
    explicit FlakyBackend(int failures, ErrorCode code = ErrorCode::TransportError) : failures_(failures), code_(code) {}
    std::string name() const override { return "flaky"; }
    BackendReply send(const LlmConfig&, const MigrationPrompt&) override
    {
        ++calls;
        if (calls <= failures_)
            throw migmate::Error(code_, "simulated");
        return {"```python\nimport httpx\n```\n", Usage{10, 5, 15}};
    }
    int calls = 0;

private:
    int failures_;
    ErrorCode code_;
};

LlmConfig fast_config()
{
    LlmConfig c;
    c.retry_backoff = std::chrono::milliseconds(1);
    return c;
}

// Chat-completions stub on a loopback port.
class StubServer {
public:
    explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler)
    {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer()
    {
        server_.stop();
        thread_.join();
    }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

struct ApiKey {
    ApiKey(const char* name, const char* value) : name_(name) { setenv(name, value, 1); }
    ~ApiKey() { unsetenv(name_); }
    const char* name_;
};

} // namespace

TEST(Extract, FencedBlockWins)
{
    auto e = extract_code("Sure!\n```python\nimport httpx\nx = 1\n```\nDone.");
    EXPECT_EQ(e.code, "import httpx\nx = 1\n");
    EXPECT_FALSE(e.elided);
}

TEST(Extract, LongestOfSeveralFences)
{
    auto e = extract_code("```\na\n```\ntext\n```python\nb\nc\n```\n");
    EXPECT_EQ(e.code, "b\nc\n");
}

TEST(Extract, UnfencedReplyIsCode)
{
    EXPECT_EQ(extract_code("import httpx\n").code, "import httpx\n");
    EXPECT_THROW(extract_code("  \n\t"), migmate::Error);
}

TEST(Extract, ElisionDetected)
{
    EXPECT_TRUE(extract_code("```\ndef f():\n    # rest of the code stays the same\n```").elided);
    EXPECT_TRUE(is_elision_marker("    # ...", default_elision_phrases()));
    EXPECT_TRUE(is_elision_marker("...", default_elision_phrases()));
    EXPECT_TRUE(is_elision_marker("# Remaining code unchanged", default_elision_phrases()));
    EXPECT_FALSE(is_elision_marker("x = '# rest of the code'", default_elision_phrases()));
    EXPECT_FALSE(is_elision_marker("# compute the total", default_elision_phrases()));
    EXPECT_TRUE(is_elision_marker("# keep as is", {"keep as is"}));
}

TEST(Prompt, CarriesLibrariesAndWholeFile)
{
    auto p = prompt_for("pkg/mod.py", "import requests\nrequests.get('x')\n");
    auto msg = p.user_message();
    EXPECT_NE(msg.find("requests"), std::string::npos);
    EXPECT_NE(msg.find("httpx"), std::string::npos);
    EXPECT_NE(msg.find("pkg/mod.py"), std::string::npos);
    EXPECT_NE(msg.find("requests.get('x')"), std::string::npos);
    EXPECT_EQ(p.system_preamble, system_preamble());
    EXPECT_GT(p.estimated_tokens(), 0u);
}

TEST(Transcript, BlocksAndNoEol)
{
    auto t = parse_transcript("header\n@@@ file: a.py\nx = 1\n@@@ end\n@@@ file: b.py\ny\n@@@ end noeol\n");
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t["a.py"], "x = 1\n");
    EXPECT_EQ(t["b.py"], "y");
    EXPECT_THROW(parse_transcript("@@@ file: a.py\nx\n"), migmate::Error);
}

TEST(MockBackend, MissIsReported)
{
    MockBackend mock(Transcript{{"a.py", "import httpx\n"}});
    EXPECT_FALSE(mock.uses_network());
    try {
        complete(fast_config(), prompt_for("b.py"), mock);
        FAIL();
    } catch (const migmate::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MockTranscriptMiss);
    }
    EXPECT_EQ(complete(fast_config(), prompt_for("a.py"), mock).extracted_code, "import httpx\n");
}

TEST(Complete, RetriesTransientFailures)
{
    FlakyBackend backend(2);
    std::vector<std::string> log;
    auto r = complete(fast_config(), prompt_for("a.py"), backend, [&](std::string_view s) { log.emplace_back(s); });
    EXPECT_EQ(backend.calls, 3);
    EXPECT_EQ(r.extracted_code, "import httpx\n");
    ASSERT_TRUE(r.usage);
    EXPECT_EQ(r.usage->total_tokens, 15);
    bool saw_request = false;
    for (const auto& l : log)
        saw_request |= l.find("llm request") != std::string::npos && l.find("model=gpt-4o-mini") != std::string::npos;
    EXPECT_TRUE(saw_request);
}

TEST(Complete, GivesUpAfterMaxRetries)
{
    FlakyBackend backend(10);
    auto cfg = fast_config();
    cfg.max_retries = 2;
    try {
        complete(cfg, prompt_for("a.py"), backend);
        FAIL();
    } catch (const migmate::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TransportError);
    }
    EXPECT_EQ(backend.calls, 3);
}

TEST(Complete, AuthFailureIsFinal)
{
    FlakyBackend backend(1, ErrorCode::AuthFailed);
    EXPECT_THROW(complete(fast_config(), prompt_for("a.py"), backend), migmate::Error);
    EXPECT_EQ(backend.calls, 1);
}

TEST(Complete, TokenBudgetEnforced)
{
    auto cfg = fast_config();
    cfg.token_budget = 10;
    MockBackend mock(Transcript{{"a.py", "x"}});
    try {
        complete(cfg, prompt_for("a.py", std::string(4000, 'x')), mock);
        FAIL();
    } catch (const migmate::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FileTooLarge);
    }
}

TEST(Config, Validation)
{
    LlmConfig c;
    EXPECT_NO_THROW(c.validate());
    c.temperature = -1;
    EXPECT_THROW(c.validate(), migmate::Error);
    c = LlmConfig{};
    c.max_retries = -1;
    EXPECT_THROW(c.validate(), migmate::Error);
    c = LlmConfig{};
    c.model.clear();
    EXPECT_THROW(c.validate(), migmate::Error);
}

TEST(OpenAi, MissingKey)
{
    LlmConfig c;
    c.api_key_env = "MIGMATE_TEST_UNSET_KEY";
    unsetenv("MIGMATE_TEST_UNSET_KEY");
    try {
        OpenAiBackend backend(c);
        FAIL();
    } catch (const migmate::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingApiKey);
        EXPECT_EQ(e.detail(), "MIGMATE_TEST_UNSET_KEY");
    }
}

TEST(OpenAi, SendsChatCompletionAndReadsUsage)
{
    ApiKey key("MIGMATE_TEST_KEY", "sk-test");
    json seen;
    std::string auth;
    StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        auth = req.get_header_value("Authorization");
        json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "```python\nimport httpx\n```"}}}}}},
                      {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 4}, {"total_tokens", 16}}}};
        res.set_content(reply.dump(), "application/json");
    });
    auto cfg = fast_config();
    cfg.base_url = stub.base_url();
    cfg.api_key_env = "MIGMATE_TEST_KEY";
    cfg.model = "test-model";
    OpenAiBackend backend(cfg);
    auto r = complete(cfg, prompt_for("a.py"), backend);
    EXPECT_EQ(r.extracted_code, "import httpx\n");
    EXPECT_EQ(auth, "Bearer sk-test");
    EXPECT_EQ(seen["model"], "test-model");
    EXPECT_EQ(seen["temperature"], 0.0);
    ASSERT_EQ(seen["messages"].size(), 2u);
    EXPECT_EQ(seen["messages"][0]["role"], "system");
    EXPECT_EQ(r.usage->prompt_tokens, 12);
}

TEST(OpenAi, RetriesServerErrorsThenSucceeds)
{
    ApiKey key("MIGMATE_TEST_KEY", "sk-test");
    std::atomic<int> calls{0};
    StubServer stub([&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = calls == 1 ? 503 : 429;
            return;
        }
        res.set_content(json{{"choices", {{{"message", {{"content", "import httpx\n"}}}}}}}.dump(), "application/json");
    });
    auto cfg = fast_config();
    cfg.base_url = stub.base_url();
    cfg.api_key_env = "MIGMATE_TEST_KEY";
    OpenAiBackend backend(cfg);
    EXPECT_EQ(complete(cfg, prompt_for("a.py"), backend).extracted_code, "import httpx\n");
    EXPECT_EQ(calls.load(), 3);
}

TEST(OpenAi, UnauthorizedAndRefusal)
{
    ApiKey key("MIGMATE_TEST_KEY", "sk-test");
    std::atomic<int> mode{0};
    StubServer stub([&](const httplib::Request&, httplib::Response& res) {
        if (mode == 0) {
            res.status = 401;
            return;
        }
        res.set_content(json{{"choices", {{{"message", {{"content", nullptr}, {"refusal", "no"}}}}}}}.dump(),
                        "application/json");
    });
    auto cfg = fast_config();
    cfg.base_url = stub.base_url();
    cfg.api_key_env = "MIGMATE_TEST_KEY";
    OpenAiBackend backend(cfg);
    try {
        complete(cfg, prompt_for("a.py"), backend);
        FAIL();
    } catch (const migmate::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AuthFailed);
    }
    mode = 1;
    try {
        complete(cfg, prompt_for("a.py"), backend);
        FAIL();
    } catch (const migmate::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ModelRefusal);
    }
}
