#include "support.hpp"

#include "migmate/error.hpp"
#include "migmate/session.hpp"

#include <regex>

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

using namespace testing_support;
using namespace migmate;

namespace {

class SessionStoreTest : public ::testing::Test {
protected:
    SessionStoreTest() : root_("session"), store_(root_ / "ws", root_ / "work")
    {
        std::filesystem::create_directories(root_ / "ws");
        options_.source = "requests";
        options_.target = "httpx";
    }

    MigrationSession make(bool force = false)
    {
        std::vector<PristineFile> files{{"requirements.txt", diff::FileKind::Dependency, false, false, {}},
                                        {"app.py", diff::FileKind::Source, false, true, {1}}};
        std::map<std::string, std::string> pristine{{"requirements.txt", "requests\n"}, {"app.py", "import requests\n"}};
        return store_.create(options_, files, pristine, nlohmann::json{{"llm", "default"}}, force);
    }

    RoundRecord premig_record(std::size_t index = 0)
    {
        RoundRecord r;
        r.kind = RoundKind::Premig;
        r.index = index;
        r.report = harness::parse_junit_xml(
            "<testsuites><testsuite name=\"s\"><testcase classname=\"t\" name=\"a\" file=\"tests/t.py\" line=\"3\"/>"
            "</testsuite></testsuites>",
            "premig");
        r.report->exit_code = 0;
        r.report->started_at = "2026-01-01T00:00:00.000Z";
        r.report->finished_at = "2026-01-01T00:00:01.000Z";
        r.started_at = "2026-01-01T00:00:00.000Z";
        r.finished_at = "2026-01-01T00:00:01.000Z";
        return r;
    }

    TempDir root_;
    SessionStore store_;
    MigrationOptions options_;
};

} // namespace

TEST_F(SessionStoreTest, CreateWritesLayoutAndLock)
{
    auto s = make();
    EXPECT_TRUE(std::regex_match(s.id, std::regex(R"(\d{8}-\d{6}-[0-9a-f]{6})"))) << s.id;
    EXPECT_EQ(s.dir, root_ / "work" / "sessions" / s.id);
    for (const char* f : {"config", "session", "events.log", "log.txt", "pristine/app.py", "pristine/requirements.txt"})
        EXPECT_TRUE(std::filesystem::exists(s.dir / f)) << f;
    EXPECT_EQ(util::read_file(s.pristine_path("app.py")), "import requests\n");
    EXPECT_EQ(store_.live_lock_holder(), s.id);
    EXPECT_FALSE(store_.interrupted(s));
}

TEST_F(SessionStoreTest, SecondSessionRejectedWhileLocked)
{
    auto s = make();
    try {
        make();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SessionAlreadyRunning);
    }
    store_.release_lock(s.id);
    EXPECT_FALSE(store_.live_lock_holder());
    EXPECT_NO_THROW(make());
}

TEST_F(SessionStoreTest, StaleLockNeedsForce)
{
    auto s = make();
    store_.release_lock(s.id);
    // A lock left by a process that no longer exists.
    pid_t child = fork();
    if (child == 0)
        _exit(0);
    waitpid(child, nullptr, 0);
    util::write_file_atomic(root_ / "work" / "lock",
                            nlohmann::json{{"session", "old"}, {"pid", child}, {"token", "x"}, {"acquired_at", "t"}}.dump());
    EXPECT_FALSE(store_.live_lock_holder());
    try {
        make();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SessionAlreadyRunning);
    }
    EXPECT_NO_THROW(make(true));
}

TEST_F(SessionStoreTest, LoadRoundTrip)
{
    auto s = make();
    s.progress = Progress{"llmmig", 1, 2, "migrating app.py"};
    store_.set_state(s, SessionState::Running);
    auto loaded = store_.load(s.id);
    EXPECT_EQ(loaded.state, SessionState::Running);
    EXPECT_EQ(loaded.options.source, "requests");
    EXPECT_EQ(loaded.progress.message, "migrating app.py");
    EXPECT_EQ(loaded.progress.file_count, 2u);
    ASSERT_EQ(loaded.files.size(), 2u);
    EXPECT_EQ(loaded.file("app.py")->import_lines, std::vector<std::size_t>{1});
    EXPECT_EQ(loaded.config_origin["llm"], "default");
    EXPECT_EQ(loaded.created_at, s.created_at);
}

TEST_F(SessionStoreTest, StateMachine)
{
    using S = SessionState;
    EXPECT_TRUE(session_transition_allowed(S::Initializing, S::Running));
    EXPECT_TRUE(session_transition_allowed(S::Running, S::AwaitingReview));
    EXPECT_TRUE(session_transition_allowed(S::AwaitingReview, S::Done));
    EXPECT_TRUE(session_transition_allowed(S::Running, S::Aborted));
    EXPECT_FALSE(session_transition_allowed(S::Done, S::Aborted));
    EXPECT_FALSE(session_transition_allowed(S::Aborted, S::Running));
    EXPECT_FALSE(session_transition_allowed(S::AwaitingReview, S::Running));
    auto s = make();
    store_.set_state(s, S::Running);
    store_.set_state(s, S::AwaitingReview);
    EXPECT_THROW(store_.set_state(s, S::Running), Error);
}

TEST_F(SessionStoreTest, RoundsAreImmutable)
{
    auto s = make();
    auto r = premig_record();
    store_.archive_round(s, r);
    EXPECT_EQ(s.rounds, std::vector<std::string>{"00-premig"});
    try {
        store_.archive_round(s, r);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RoundImmutable);
    }
    auto back = store_.load_round(s, "00-premig");
    ASSERT_TRUE(back.report);
    EXPECT_EQ(back.report->counts().passed, 1);
    EXPECT_EQ(back.report->cases[0].file, "tests/t.py");
    EXPECT_EQ(back.report->cases[0].line, 3);
    EXPECT_EQ(back.report->started_at, "2026-01-01T00:00:00.000Z");
    EXPECT_EQ(store_.load(s.id).rounds, std::vector<std::string>{"00-premig"});
    for (const auto& e : std::filesystem::directory_iterator(s.dir / "rounds"))
        EXPECT_FALSE(e.path().filename().string().starts_with(".tmp")) << e.path();
}

TEST_F(SessionStoreTest, ChangingRoundKeepsSnapshotsAndComparison)
{
    auto s = make();
    auto pre = premig_record();
    store_.archive_round(s, pre);
    RoundRecord r;
    r.kind = RoundKind::Llmmig;
    r.index = 1;
    r.snapshots = {{"app.py", "import httpx\n"}, {"requirements.txt", "httpx\n"}};
    r.report = pre.report;
    r.comparison = harness::compare_reports(*pre.report, *r.report);
    r.files = {FileOutcome{"app.py", "migrated", false, std::nullopt, "```\nimport httpx\n```"}};
    r.warnings = {"something"};
    store_.archive_round(s, r);
    auto rounds = store_.load_rounds(s);
    ASSERT_EQ(rounds.size(), 2u);
    EXPECT_EQ(rounds[1].snapshots, r.snapshots);
    EXPECT_EQ(rounds[1].comparison, r.comparison);
    EXPECT_EQ(rounds[1].warnings, r.warnings);
    ASSERT_NE(rounds[1].outcome("app.py"), nullptr);
    EXPECT_EQ(rounds[1].outcome("app.py")->raw_response, "```\nimport httpx\n```");
}

TEST_F(SessionStoreTest, CorruptFilesNamed)
{
    auto s = make();
    util::write_file_atomic(s.dir / "session", "{not json");
    try {
        store_.load(s.id);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CorruptSession);
        EXPECT_NE(std::string(e.what()).find("session"), std::string::npos);
    }
    std::filesystem::remove(s.dir / "config");
    try {
        store_.load(s.id);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CorruptSession);
        EXPECT_NE(std::string(e.what()).find("config"), std::string::npos);
    }
    try {
        store_.load("20990101-000000-abcdef");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SessionNotFound);
    }
}

TEST_F(SessionStoreTest, EventsAreOrderedJsonLines)
{
    auto s = make();
    for (int i = 0; i < 5; ++i)
        store_.record_event(s, TelemetryEvent{"hunk_applied", {{"n", i}}, {}});
    auto events = store_.events(s);
    ASSERT_EQ(events.size(), 5u);
    for (std::size_t i = 0; i < events.size(); ++i) {
        EXPECT_EQ(events[i].attrs["n"], static_cast<int>(i));
        if (i > 0)
            EXPECT_LE(events[i - 1].at, events[i].at);
    }
    for (const auto& line : util::split_lines_keep(util::read_file(s.dir / "events.log"))) {
        auto j = nlohmann::json::parse(line);
        EXPECT_EQ(j["session"], s.id);
        EXPECT_EQ(j["schema"], kSchemaVersion);
    }
}

TEST_F(SessionStoreTest, ListAndLatest)
{
    EXPECT_FALSE(store_.latest());
    auto a = make();
    store_.release_lock(a.id);
    auto b = make();
    store_.release_lock(b.id);
    EXPECT_EQ(store_.list(), (std::vector<std::string>{a.id, b.id}));
    EXPECT_EQ(store_.latest(), b.id);
}

TEST_F(SessionStoreTest, InterruptedWhenRunningWithoutHolder)
{
    auto s = make();
    store_.set_state(s, SessionState::Running);
    EXPECT_FALSE(store_.interrupted(s));
    store_.release_lock(s.id);
    EXPECT_TRUE(store_.interrupted(s));
    store_.set_state(s, SessionState::AwaitingReview);
    EXPECT_FALSE(store_.interrupted(s));
}

TEST_F(SessionStoreTest, ReleaseIgnoresOtherSessions)
{
    auto s = make();
    store_.release_lock("someone-else");
    EXPECT_EQ(store_.live_lock_holder(), s.id);
}

TEST(SessionWorkdir, DefaultInsideWorkspace)
{
    TempDir root("wd");
    SessionStore def(root.path());
    EXPECT_EQ(def.workdir(), root.path() / ".migmate");
    SessionStore rel(root.path(), std::filesystem::path("custom"));
    EXPECT_EQ(rel.workdir(), root.path() / "custom");
}
