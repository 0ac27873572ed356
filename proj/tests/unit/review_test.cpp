#include "migrated_workspace.hpp"

#include "migmate/error.hpp"
#include "migmate/review.hpp"

#include <random>

#include <gtest/gtest.h>

using namespace testing_support;
using namespace migmate;

namespace {

void expect_code(ErrorCode code, const std::function<void()>& f)
{
    try {
        f();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

std::map<std::string, std::string> final_snapshots(const MigratedWorkspace& ws)
{
    auto s = ws.session();
    return ws.store->load_round(s, s.rounds.at(*s.verdict->final_round_index)).snapshots;
}

std::size_t count_events(const MigratedWorkspace& ws, const std::string& kind)
{
    auto events = ws.store->events(ws.session());
    return std::count_if(events.begin(), events.end(), [&](const TelemetryEvent& e) { return e.kind == kind; });
}

} // namespace

TEST(Review, ReviewSetListsChangedFiles)
{
    MigratedWorkspace ws;
    ASSERT_EQ(ws.verdict.status, VerdictStatus::Clean);
    ReviewController ctrl(*ws.store, ws.session());
    const auto& review = ctrl.review();
    std::vector<std::string> paths;
    for (const auto& f : review.files)
        paths.push_back(f.path);
    EXPECT_EQ(paths, (std::vector<std::string>{"requirements.txt", "shop/api.py", "shop/client.py"}));
    EXPECT_EQ(review.file("requirements.txt")->kind, diff::FileKind::Dependency);
    EXPECT_EQ(review.count(diff::HunkState::Pending), 4u);
}

TEST(Review, ApplyOneHunkTouchesOnlyThatHunk)
{
    MigratedWorkspace ws;
    ReviewController ctrl(*ws.store, ws.session());
    auto r = ctrl.apply_hunks({"shop/client.py:1"});
    EXPECT_EQ(r.state, SessionState::Applying);
    ASSERT_EQ(r.changed.size(), 1u);
    EXPECT_EQ(r.written_files, std::vector<std::string>{"shop/client.py"});

    const auto* file = ctrl.review().file("shop/client.py");
    EXPECT_EQ(ws.read("shop/client.py"), diff::apply_selection(*file, {"shop/client.py:1"}));
    EXPECT_NE(ws.read("shop/client.py").find("import requests\n"), std::string::npos);
    EXPECT_EQ(ws.read("shop/api.py"), ws.pristine("shop/api.py"));
    EXPECT_EQ(ws.read("requirements.txt"), ws.pristine("requirements.txt"));
    EXPECT_EQ(ctrl.review().count(diff::HunkState::Applied), 1u);
    EXPECT_EQ(count_events(ws, "hunk_applied"), 1u);

    ReviewController reloaded(*ws.store, ws.session());
    EXPECT_EQ(reloaded.review().file("shop/client.py")->find("shop/client.py:1")->state, diff::HunkState::Applied);
    EXPECT_EQ(reloaded.session().state, SessionState::Applying);
}

TEST(Review, ApplyAllReproducesFinalSnapshotAndCloses)
{
    MigratedWorkspace ws;
    ReviewController ctrl(*ws.store, ws.session());
    ctrl.apply_file("shop/api.py");
    auto r = ctrl.apply_all();
    EXPECT_EQ(r.state, SessionState::Done);
    for (const auto& [path, content] : final_snapshots(ws))
        EXPECT_EQ(ws.read(path), content) << path;
    EXPECT_EQ(ws.session().state, SessionState::Done);
    EXPECT_EQ(count_events(ws, "file_applied"), 1u);
    EXPECT_EQ(count_events(ws, "all_applied"), 1u);
    auto events = ws.store->events(ws.session());
    auto closed = std::find_if(events.begin(), events.end(), [](const auto& e) { return e.kind == "preview_closed"; });
    ASSERT_NE(closed, events.end());
    EXPECT_EQ(closed->attrs["auto"], true);
    EXPECT_EQ(closed->attrs["applied"], 4);
    EXPECT_EQ(closed->attrs["discarded"], 0);
}

TEST(Review, ReapplyAndUnknownIds)
{
    MigratedWorkspace ws;
    ReviewController ctrl(*ws.store, ws.session());
    ctrl.apply_hunks({"shop/api.py:0"});
    expect_code(ErrorCode::AlreadyApplied, [&] { ctrl.apply_hunks({"shop/api.py:0"}); });
    expect_code(ErrorCode::UnknownHunkId, [&] { ctrl.apply_hunks({"shop/api.py:7"}); });
    expect_code(ErrorCode::UnknownHunkId, [&] { ctrl.apply_file("shop/none.py"); });
}

TEST(Review, ExternalEditIsContextMismatch)
{
    MigratedWorkspace ws;
    ReviewController ctrl(*ws.store, ws.session());
    ctrl.apply_hunks({"shop/client.py:0"});
    auto edited = ws.read("shop/client.py") + "# local edit\n";
    util::write_file_atomic(ws.workspace / "shop/client.py", edited);
    try {
        ctrl.apply_hunks({"shop/client.py:1"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ContextMismatch);
        EXPECT_EQ(e.detail(), "shop/client.py");
    }
    EXPECT_EQ(ws.read("shop/client.py"), edited);
    EXPECT_EQ(ctrl.review().file("shop/client.py")->find("shop/client.py:1")->state, diff::HunkState::Pending);
}

TEST(Review, CloseDiscardsPendingAndIsFinal)
{
    MigratedWorkspace ws;
    ReviewController ctrl(*ws.store, ws.session());
    ctrl.apply_hunks({"requirements.txt:0"});
    auto r = ctrl.close();
    EXPECT_EQ(r.state, SessionState::Done);
    EXPECT_EQ(ctrl.review().count(diff::HunkState::Rejected), 3u);
    EXPECT_EQ(ws.read("shop/api.py"), ws.pristine("shop/api.py"));
    EXPECT_NE(ws.read("requirements.txt").find("httpx"), std::string::npos);
    expect_code(ErrorCode::InvalidState, [&] { ctrl.close(); });
    expect_code(ErrorCode::AlreadyApplied, [&] { ctrl.apply_all(); });
    ReviewController again(*ws.store, ws.session());
    expect_code(ErrorCode::AlreadyApplied, [&] { again.apply_hunks({"shop/api.py:0"}); });
}

TEST(Review, BulkWritesSelectionOnceAndFinishes)
{
    MigratedWorkspace ws("clean.txt", PreviewStyle::Bulk);
    ReviewController ctrl(*ws.store, ws.session());
    auto r = ctrl.apply("hunk", {"shop/client.py:0", "shop/api.py:0"});
    EXPECT_EQ(r.state, SessionState::Done);
    const auto* client = ctrl.review().file("shop/client.py");
    EXPECT_EQ(ws.read("shop/client.py"), diff::apply_selection(*client, {"shop/client.py:0"}));
    EXPECT_EQ(ws.read("shop/api.py"), final_snapshots(ws).at("shop/api.py"));
    EXPECT_EQ(ws.read("requirements.txt"), ws.pristine("requirements.txt"));
    EXPECT_EQ(ctrl.review().count(diff::HunkState::Rejected), 2u);
}

TEST(Review, BulkConflictWritesNothing)
{
    MigratedWorkspace ws("clean.txt", PreviewStyle::Bulk);
    util::write_file_atomic(ws.workspace / "shop/client.py", "# replaced\n");
    ReviewController ctrl(*ws.store, ws.session());
    expect_code(ErrorCode::ContextMismatch, [&] { ctrl.apply("all", {}); });
    EXPECT_EQ(ws.read("shop/api.py"), ws.pristine("shop/api.py"));
    EXPECT_EQ(ws.read("requirements.txt"), ws.pristine("requirements.txt"));
    EXPECT_EQ(ws.session().state, SessionState::AwaitingReview);
}

TEST(Review, UnfinalizedSessionRejected)
{
    TempDir root("rv");
    copy_fixture("shop", root / "shop");
    SessionStore store(root / "shop", root / "work");
    MigrationOptions o;
    o.source = "requests";
    o.target = "httpx";
    o.mock_llm = (fixtures() / "transcripts" / "clean.txt").string();
    auto s = start_session(store, o);
    ReviewController ctrl(store, s);
    expect_code(ErrorCode::InvalidState, [&] { ctrl.apply_all(); });
    expect_code(ErrorCode::InvalidState, [&] { ctrl.close(); });
}

TEST(Review, ApplyScopeNeedsIds)
{
    MigratedWorkspace ws;
    ReviewController ctrl(*ws.store, ws.session());
    expect_code(ErrorCode::InvalidConfig, [&] { ctrl.apply("hunk", {}); });
}

// Any order of single-hunk applies leaves each file equal to its selection.
TEST(ReviewProperty, RandomApplyOrders)
{
    MigratedWorkspace ws;
    std::mt19937 rng(42);
    auto base = ws.session();
    std::vector<std::string> ids;
    {
        ReviewController probe(*ws.store, base);
        for (const auto& f : probe.review().files)
            for (const auto& h : f.hunks)
                ids.push_back(h.id);
    }
    for (int trial = 0; trial < 6; ++trial) {
        // Reset the workspace and the stored review.
        for (const auto& f : base.files)
            util::write_file_atomic(ws.workspace / f.path, util::read_file(base.pristine_path(f.path)));
        auto s = ws.session();
        s.state = SessionState::AwaitingReview;
        ws.store->save_state(s);
        {
            ReviewController fresh(*ws.store, s);
            auto review = fresh.review();
            for (auto& f : review.files)
                for (auto& h : f.hunks)
                    h.state = diff::HunkState::Pending;
            save_review(s, review);
        }
        ReviewController ctrl(*ws.store, s);
        auto order = ids;
        std::shuffle(order.begin(), order.end(), rng);
        order.resize(1 + rng() % order.size());
        std::set<std::string> applied;
        for (const auto& id : order) {
            ctrl.apply_hunks({id});
            applied.insert(id);
            for (const auto& f : ctrl.review().files) {
                std::set<std::string> mine;
                for (const auto& h : f.hunks)
                    if (applied.count(h.id))
                        mine.insert(h.id);
                EXPECT_EQ(ws.read(f.path), diff::restore_eol(diff::apply_selection(f, mine), f.eol))
                    << "trial " << trial << " after " << id;
            }
        }
    }
}
