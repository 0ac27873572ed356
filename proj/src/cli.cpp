#include "migmate/cli.hpp"

#include "migmate/depfile.hpp"
#include "migmate/error.hpp"
#include "migmate/pipeline.hpp"
#include "migmate/process.hpp"
#include "migmate/review.hpp"
#include "migmate/service.hpp"
#include "migmate/util.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <condition_variable>
#include <csignal>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <thread>

#include <pthread.h>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace migmate::cli {

namespace {

// Blocks termination signals and handles them on a dedicated thread.
class SignalWatcher {
public:
    explicit SignalWatcher(std::function<void(int)> on_signal) : on_signal_(std::move(on_signal))
    {
        sigemptyset(&set_);
        sigaddset(&set_, SIGINT);
        sigaddset(&set_, SIGTERM);
        sigaddset(&set_, SIGHUP);
        sigaddset(&set_, SIGUSR2);
        pthread_sigmask(SIG_BLOCK, &set_, &previous_);
        thread_ = std::thread([this] {
            for (;;) {
                int sig = 0;
                if (sigwait(&set_, &sig) != 0)
                    continue;
                if (sig == SIGUSR2) {
                    if (done_)
                        return;
                    continue;
                }
                on_signal_(sig);
            }
        });
    }

    ~SignalWatcher()
    {
        done_ = true;
        pthread_kill(thread_.native_handle(), SIGUSR2);
        thread_.join();
        pthread_sigmask(SIG_SETMASK, &previous_, nullptr);
    }

    SignalWatcher(const SignalWatcher&) = delete;
    SignalWatcher& operator=(const SignalWatcher&) = delete;

private:
    std::function<void(int)> on_signal_;
    sigset_t set_{};
    sigset_t previous_{};
    std::atomic<bool> done_{false};
    std::thread thread_;
};

struct FlagValues {
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::vector<std::string>> lists;
    std::map<std::string, bool> bools;
    std::map<std::string, CLI::Option*> options;

    config::Layer layer() const
    {
        config::Layer out;
        for (const auto& [name, opt] : options) {
            if (opt->count() == 0)
                continue;
            const auto* key = config::find_key(name);
            if (bools.count(name))
                out[name] = bools.at(name);
            else if (lists.count(name)) {
                std::string joined;
                for (const auto& v : lists.at(name))
                    joined += (joined.empty() ? "" : ",") + v;
                out[name] = config::coerce(*key, joined);
            } else
                out[name] = config::coerce(*key, scalars.at(name));
        }
        return out;
    }
};

void add_config_flags(CLI::App& sub, FlagValues& flags, const std::vector<std::string>& only = {})
{
    for (const auto& key : config::keys()) {
        if (!only.empty() && std::find(only.begin(), only.end(), key.name) == only.end())
            continue;
        std::string flag = "--" + key.name;
        CLI::Option* opt = nullptr;
        switch (key.type) {
        case config::ValueType::Bool:
            flags.bools[key.name] = false;
            opt = sub.add_flag(flag, flags.bools[key.name], key.help);
            break;
        case config::ValueType::List:
        case config::ValueType::Map:
            opt = sub.add_option(flag, flags.lists[key.name], key.help)->type_name("TEXT")->allow_extra_args(false);
            break;
        default:
            opt = sub.add_option(flag, flags.scalars[key.name], key.help);
            break;
        }
        flags.options[key.name] = opt;
    }
}

struct Context {
    Io& io;
    fs::path workspace;
    config::CliConfig cfg;
    config::Layer file, env, flags;
};

Context make_context(Io& io, const std::string& workspace_flag, const FlagValues& flags)
{
    fs::path ws = workspace_flag.empty() ? io.cwd : fs::path(workspace_flag);
    if (ws.is_relative())
        ws = io.cwd / ws;
    ws = ws.lexically_normal();
    if (!fs::is_directory(ws))
        throw Error(ErrorCode::InvalidConfig, "workspace " + ws.string() + " is not a directory", ws.string());
    Context ctx{io, ws, {}, config::file_layer(ws), config::env_layer(io.env), flags.layer()};
    ctx.cfg = config::resolve(ctx.file, ctx.env, ctx.flags, io.interactive);
    if (ctx.cfg.options.mock_llm) {
        fs::path p = *ctx.cfg.options.mock_llm;
        if (p.is_relative())
            ctx.cfg.options.mock_llm = (io.cwd / p).lexically_normal().string();
    }
    if (ctx.cfg.workdir && ctx.cfg.workdir->is_relative())
        ctx.cfg.workdir = ws / *ctx.cfg.workdir;
    return ctx;
}

std::string resolve_session_id(const SessionStore& store, const std::string& given)
{
    if (!given.empty())
        return given;
    auto latest = store.latest();
    if (!latest)
        throw Error(ErrorCode::SessionNotFound,
                    "no migration sessions in " + store.workdir().string() +
                        "; start one with `migmate migrate <source> <target>`");
    return *latest;
}

std::optional<std::string> prompt_line(Io& io, const std::string& question)
{
    io.out << question << std::flush;
    std::string line;
    if (!std::getline(io.in, line))
        return std::nullopt;
    return std::string(util::trim(line));
}

void pick_libraries(Context& ctx, std::string& source, std::string& target)
{
    if (source.empty()) {
        std::vector<depfile::DependencyEntry> entries;
        std::vector<std::string> where;
        for (const auto& df : depfile::discover(ctx.workspace))
            for (const auto& e : df.entries) {
                entries.push_back(e);
                where.push_back(df.path);
            }
        if (entries.empty())
            throw Error(ErrorCode::NoDependencyFile, "no declared dependencies found in " + ctx.workspace.string());
        ctx.io.out << "Dependencies declared in this workspace:\n";
        for (std::size_t i = 0; i < entries.size(); ++i)
            ctx.io.out << "  " << (i + 1) << ") " << entries[i].raw_name << entries[i].version_spec.value_or("")
                       << "  (" << where[i] << ":" << entries[i].line << ")\n";
        auto answer = prompt_line(ctx.io, "Source library [1-" + std::to_string(entries.size()) + "]: ");
        if (!answer || answer->empty())
            throw Error(ErrorCode::InvalidConfig, "no source library selected");
        try {
            std::size_t used = 0;
            std::size_t n = std::stoul(*answer, &used);
            if (used == answer->size() && n >= 1 && n <= entries.size())
                source = entries[n - 1].raw_name;
        } catch (const std::exception&) {
        }
        if (source.empty())
            source = *answer;
    }
    if (target.empty()) {
        auto answer = prompt_line(ctx.io, "Target library for " + source + ": ");
        if (!answer || answer->empty())
            throw Error(ErrorCode::InvalidConfig, "no target library given");
        target = *answer;
    }
}

void print_hunk(std::ostream& out, const diff::FileDiff& f, const diff::Hunk& h)
{
    out << "--- a/" << f.path << "\n+++ b/" << f.path << "\n" << h.header() << "\n";
    for (const auto& l : h.lines) {
        out << (l.kind == diff::LineKind::Context ? ' ' : l.kind == diff::LineKind::Removed ? '-' : '+') << l.text
            << "\n";
        if (l.no_newline)
            out << "\\ No newline at end of file\n";
    }
}

void print_result(std::ostream& out, const ApplyResult& r)
{
    std::size_t applied = 0, rejected = 0;
    for (const auto& c : r.changed)
        (c.state == diff::HunkState::Applied ? applied : rejected) += 1;
    out << "applied " << applied << " hunk(s)";
    if (rejected)
        out << ", discarded " << rejected;
    if (!r.written_files.empty()) {
        out << " in";
        for (const auto& f : r.written_files)
            out << " " << f;
    }
    out << "; session " << to_string(r.state) << "\n";
}

// Walks the review set hunk by hunk on the terminal.
void review_interactive(Io& io, ReviewController& ctrl)
{
    const bool bulk = ctrl.session().options.preview_style == PreviewStyle::Bulk;
    const auto& review = ctrl.review();
    if (review.files.empty()) {
        io.out << "nothing to review\n";
        print_result(io.out, ctrl.close());
        return;
    }
    std::size_t total = 0;
    for (const auto& f : review.files)
        total += f.hunks.size();
    io.out << total << " hunk(s) in " << review.files.size() << " file(s); answers: y apply, n skip, f rest of file, "
           << "a everything, q stop\n";

    std::set<std::string> accepted;
    std::vector<std::string> order;
    for (const auto& f : review.files)
        for (const auto& h : f.hunks)
            if (h.state == diff::HunkState::Pending)
                order.push_back(h.id);

    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::string id = order[i];
        const diff::FileDiff* file = ctrl.review().file(id.substr(0, id.rfind(':')));
        const diff::Hunk* hunk = file ? file->find(id) : nullptr;
        if (!hunk || hunk->state != diff::HunkState::Pending || accepted.count(id))
            continue;
        print_hunk(io.out, *file, *hunk);
        auto answer = prompt_line(io, "Apply " + id + " [y,n,f,a,q]? ");
        char c = answer && !answer->empty() ? static_cast<char>(std::tolower((*answer)[0])) : 'q';
        if (c == 'q')
            break;
        if (c == 'n')
            continue;
        if (c == 'y') {
            if (bulk)
                accepted.insert(id);
            else
                print_result(io.out, ctrl.apply_hunks({id}));
            continue;
        }
        if (c == 'f') {
            if (bulk) {
                for (const auto& h : file->hunks)
                    accepted.insert(h.id);
            } else {
                print_result(io.out, ctrl.apply_file(file->path));
            }
            continue;
        }
        if (c == 'a') {
            if (bulk) {
                for (const auto& rest : order)
                    accepted.insert(rest);
                break;
            }
            print_result(io.out, ctrl.apply_all());
            return;
        }
        io.out << "unrecognized answer; skipping\n";
    }
    if (bulk) {
        print_result(io.out, ctrl.apply_bulk(accepted));
        return;
    }
    print_result(io.out, ctrl.close());
}

MigrationSession load_resuming(const SessionStore& store, const std::string& id, Io& io)
{
    auto session = store.load(id);
    if (store.interrupted(session)) {
        io.err << "session " << id << " was interrupted; finishing the remaining rounds\n";
        resume_if_interrupted(store, session, [&io](const Progress& p) {
            io.err << "[" << p.round << "] " << p.message << "\n";
        });
    }
    return session;
}

int verdict_exit(const MigrationVerdict& v)
{
    switch (v.status) {
    case VerdictStatus::Clean: return 0;
    case VerdictStatus::Regressed: return 2;
    case VerdictStatus::Aborted: return 3;
    }
    return 3;
}

std::string counts_line(const harness::Counts& c)
{
    return "passed=" + std::to_string(c.passed) + " failed=" + std::to_string(c.failed) +
           " errored=" + std::to_string(c.errored) + " skipped=" + std::to_string(c.skipped);
}

void print_report(std::ostream& out, const SessionStore& store, const MigrationSession& s)
{
    out << "session " << s.id << "  " << s.options.source << " -> " << s.options.target << "  state: "
        << to_string(s.state) << "\n";
    if (store.interrupted(s))
        out << "note: the run was interrupted; `migmate apply` resumes it\n";
    json tests = tests_view(store, s);
    out << "verdict: " << (s.verdict ? std::string(to_string(s.verdict->status)) : std::string("pending"));
    if (s.verdict && s.verdict->final_round)
        out << " (final round " << to_string(*s.verdict->final_round) << ")";
    if (s.verdict && !s.verdict->reason.empty())
        out << ": " << s.verdict->reason;
    out << "\n\nrounds:\n";
    for (const auto& r : tests["rounds"]) {
        out << "  " << std::left << std::setw(14) << r["name"].get<std::string>();
        if (r["counts"].is_object()) {
            const auto& c = r["counts"];
            out << "passed=" << c["passed"] << " failed=" << c["failed"] << " errored=" << c["errored"]
                << " skipped=" << c["skipped"] << " exit=" << r["exit_code"];
        } else {
            out << "no test report";
        }
        if (r["comparison"].is_object()) {
            const auto& cmp = r["comparison"];
            out << "  " << cmp["verdict"].get<std::string>() << " (" << cmp["regressions"].size() << " regression(s))";
        }
        if (r["kind"] != "premig")
            out << (r["accepted"].get<bool>() ? "  kept" : "  not kept");
        out << "\n";
        for (const auto& w : r["warnings"])
            out << "      warning: " << w.get<std::string>() << "\n";
    }
    if (tests["baseline"].is_object() && tests["final"].is_object()) {
        const auto& a = tests["baseline"]["counts"];
        const auto& b = tests["final"]["counts"];
        out << "\n" << std::left << std::setw(10) << "status" << std::setw(8) << "pre" << "post\n";
        for (const char* k : {"passed", "failed", "errored", "skipped", "total"})
            out << std::left << std::setw(10) << k << std::setw(8) << a[k].get<int>() << b[k].get<int>() << "\n";
    }
    if (!tests["regressions"].empty()) {
        out << "\nregressions:\n";
        for (const auto& r : tests["regressions"]) {
            out << "  " << r["id"].get<std::string>();
            if (r.contains("file"))
                out << "  (" << r["file"].get<std::string>()
                    << (r.contains("line") ? ":" + std::to_string(r["line"].get<int>()) : "") << ")";
            out << "\n";
            if (r.contains("message"))
                out << "      " << r["message"].get<std::string>() << "\n";
        }
    }
}

int cmd_migrate(Context& ctx, std::string source, std::string target)
{
    auto& io = ctx.io;
    pick_libraries(ctx, source, target);
    auto& cfg = ctx.cfg;
    cfg.options.source = source;
    cfg.options.target = target;
    cfg.options.trigger = "cli";

    SessionStore store(ctx.workspace, cfg.workdir);
    std::unique_ptr<ReviewService> service;
    if (cfg.serve) {
        service = std::make_unique<ReviewService>(
            ctx.workspace, cfg.workdir, ServiceOptions{"127.0.0.1", cfg.port, ctx.file, ctx.env, ctx.flags});
        service->start();
        io.out << "review service listening on " << service->url() << "\n";
    }

    std::mutex session_mutex;
    std::string active_session;
    std::optional<SignalWatcher> watcher;
    if (io.handle_signals)
        watcher.emplace([&](int sig) {
            process::kill_active();
            {
                std::lock_guard lock(session_mutex);
                if (!active_session.empty())
                    store.release_lock(active_session);
            }
            std::cerr << "\nmigmate: interrupted (signal " << sig << ")\n";
            std::_Exit(130);
        });

    MigrationSession session = start_session(store, cfg.options, cfg.origin, cfg.force);
    {
        std::lock_guard lock(session_mutex);
        active_session = session.id;
    }
    io.out << "session " << session.id << ": migrating " << source << " -> " << target << "\n";

    std::string last;
    Pipeline pipeline(store, session, make_backend(cfg.options), [&](const Progress& p) {
        std::string line = "[" + p.round + "]";
        if (p.file_count)
            line += " " + std::to_string(p.file_index) + "/" + std::to_string(p.file_count);
        line += " " + p.message;
        if (line != last)
            io.err << line << "\n";
        last = line;
    });
    MigrationVerdict verdict = pipeline.run();
    {
        std::lock_guard lock(session_mutex);
        active_session.clear();
    }

    io.out << "verdict: " << to_string(verdict.status);
    if (verdict.final_round)
        io.out << " after " << to_string(*verdict.final_round);
    if (!verdict.reason.empty())
        io.out << " (" << verdict.reason << ")";
    io.out << "\n";
    if (verdict.status == VerdictStatus::Regressed) {
        io.err << "warning: " << verdict.regressions.size()
               << " previously passing test(s) fail after migration; see `migmate report " << session.id << "`\n";
        for (const auto& id : verdict.regressions)
            io.err << "  " << id << "\n";
    }

    if (verdict.status != VerdictStatus::Aborted) {
        const bool suppressed = verdict.status == VerdictStatus::Regressed && !cfg.options.show_preview_on_failure;
        switch (cfg.options.apply_mode) {
        case ApplyMode::All: {
            ReviewController ctrl(store, store.load(session.id));
            print_result(io.out, ctrl.apply("all", {}));
            break;
        }
        case ApplyMode::Interactive:
            if (suppressed) {
                io.out << "preview not shown because tests regressed; run `migmate review " << session.id << "`\n";
            } else {
                ReviewController ctrl(store, store.load(session.id));
                review_interactive(io, ctrl);
            }
            break;
        case ApplyMode::None:
            io.out << "changes await review: `migmate apply --all`, `migmate review` or `migmate serve`\n";
            break;
        }
    }

    if (service) {
        io.out << "review service still running on " << service->url() << "; press Ctrl-C to stop\n";
        watcher.reset();
        std::mutex m;
        std::condition_variable cv;
        bool stop = false;
        SignalWatcher serve_watcher([&](int) {
            std::lock_guard lock(m);
            stop = true;
            cv.notify_all();
        });
        std::unique_lock lock(m);
        cv.wait(lock, [&] { return stop; });
        service->stop();
    }
    return verdict_exit(verdict);
}

int cmd_report(Context& ctx, const std::string& id, bool as_json)
{
    SessionStore store(ctx.workspace, ctx.cfg.workdir);
    auto session = store.load(resolve_session_id(store, id));
    if (as_json) {
        json j = tests_view(store, session);
        j["session"] = session_view(store, session);
        ctx.io.out << j.dump(2) << "\n";
    } else {
        print_report(ctx.io.out, store, session);
    }
    store.record_event(session, TelemetryEvent{"tests_viewed", {{"trigger", "cli"}}, {}});
    return 0;
}

int cmd_apply(Context& ctx, const std::string& id, bool all, const std::vector<std::string>& files,
              const std::vector<std::string>& hunks)
{
    int chosen = (all ? 1 : 0) + (files.empty() ? 0 : 1) + (hunks.empty() ? 0 : 1);
    if (chosen != 1)
        throw Error(ErrorCode::InvalidConfig, "choose exactly one of --all, --file or --hunk");
    SessionStore store(ctx.workspace, ctx.cfg.workdir);
    auto session = load_resuming(store, resolve_session_id(store, id), ctx.io);
    ReviewController ctrl(store, std::move(session));
    ApplyResult r = all ? ctrl.apply("all", {}) : !files.empty() ? ctrl.apply("file", files) : ctrl.apply("hunk", hunks);
    print_result(ctx.io.out, r);
    return 0;
}

int cmd_review(Context& ctx, const std::string& id)
{
    SessionStore store(ctx.workspace, ctx.cfg.workdir);
    auto session = load_resuming(store, resolve_session_id(store, id), ctx.io);
    ReviewController ctrl(store, std::move(session));
    review_interactive(ctx.io, ctrl);
    return 0;
}

int cmd_close(Context& ctx, const std::string& id)
{
    SessionStore store(ctx.workspace, ctx.cfg.workdir);
    ReviewController ctrl(store, store.load(resolve_session_id(store, id)));
    print_result(ctx.io.out, ctrl.close());
    return 0;
}

int cmd_sessions(Context& ctx)
{
    SessionStore store(ctx.workspace, ctx.cfg.workdir);
    auto ids = store.list();
    if (ids.empty()) {
        ctx.io.out << "no sessions\n";
        return 0;
    }
    for (const auto& id : ids) {
        try {
            auto s = store.load(id);
            ctx.io.out << id << "  " << std::left << std::setw(16) << to_string(s.state) << s.options.source << " -> "
                       << s.options.target;
            if (s.verdict)
                ctx.io.out << "  " << to_string(s.verdict->status);
            ctx.io.out << "\n";
        } catch (const Error& e) {
            ctx.io.out << id << "  unreadable: " << e.what() << "\n";
        }
    }
    return 0;
}

int cmd_serve(Context& ctx)
{
    ReviewService service(ctx.workspace, ctx.cfg.workdir,
                          ServiceOptions{"127.0.0.1", ctx.cfg.port, ctx.file, ctx.env, ctx.flags});
    service.bind();
    ctx.io.out << "review service listening on " << service.url() << "\n" << std::flush;
    std::optional<SignalWatcher> watcher;
    if (ctx.io.handle_signals)
        watcher.emplace([&service](int) { service.stop(); });
    service.serve();
    watcher.reset();
    service.join_pipelines();
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, Io io)
{
    CLI::App app{"Migrate a Python project from one library to another, verify it with the test suite, and review "
                 "the changes hunk by hunk.",
                 "migmate"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "migmate 0.1.0");

    std::string workspace;
    auto add_workspace = [&](CLI::App* sub) {
        sub->add_option("-C,--workspace", workspace, "Project directory (default: current directory)");
    };

    FlagValues migrate_flags;
    std::string source, target;
    auto* migrate = app.add_subcommand("migrate", "Run the migration pipeline for SOURCE -> TARGET");
    migrate->add_option("source", source, "Library to migrate away from (prompted when omitted)");
    migrate->add_option("target", target, "Library to migrate to (prompted when omitted)");
    add_workspace(migrate);
    add_config_flags(*migrate, migrate_flags);

    FlagValues report_flags;
    std::string report_id;
    bool report_json = false;
    auto* report = app.add_subcommand("report", "Summarize test results and rounds of a session");
    report->add_option("session", report_id, "Session id (default: latest)");
    report->add_flag("--json", report_json, "Print the full results as JSON");
    add_workspace(report);
    add_config_flags(*report, report_flags, {"workdir"});

    FlagValues apply_flags;
    std::string apply_id;
    bool apply_all = false;
    std::vector<std::string> apply_files, apply_hunks;
    auto* apply = app.add_subcommand("apply", "Apply reviewed changes to the workspace");
    apply->add_option("session", apply_id, "Session id (default: latest)");
    apply->add_flag("--all", apply_all, "Apply every remaining hunk");
    apply->add_option("--file", apply_files, "Apply all hunks of a file")->allow_extra_args(false);
    apply->add_option("--hunk", apply_hunks, "Apply one hunk by id (<path>:<index>)")->allow_extra_args(false);
    add_workspace(apply);
    add_config_flags(*apply, apply_flags, {"workdir"});

    FlagValues review_flags;
    std::string review_id;
    auto* review = app.add_subcommand("review", "Step through the pending hunks in the terminal");
    review->add_option("session", review_id, "Session id (default: latest)");
    add_workspace(review);
    add_config_flags(*review, review_flags, {"workdir"});

    FlagValues close_flags;
    std::string close_id;
    auto* close = app.add_subcommand("close", "Finish the review, discarding unapplied hunks");
    close->add_option("session", close_id, "Session id (default: latest)");
    add_workspace(close);
    add_config_flags(*close, close_flags, {"workdir"});

    FlagValues sessions_flags;
    auto* sessions = app.add_subcommand("sessions", "List sessions of the workspace");
    add_workspace(sessions);
    add_config_flags(*sessions, sessions_flags, {"workdir"});

    FlagValues serve_flags;
    auto* serve = app.add_subcommand("serve", "Start the local review service");
    add_workspace(serve);
    add_config_flags(*serve, serve_flags);

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.push_back("migmate");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage)
        argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, io.out, io.err);
        return code == 0 ? 0 : 4;
    }

    try {
        if (*migrate) {
            auto ctx = make_context(io, workspace, migrate_flags);
            return cmd_migrate(ctx, source, target);
        }
        if (*report) {
            auto ctx = make_context(io, workspace, report_flags);
            return cmd_report(ctx, report_id, report_json);
        }
        if (*apply) {
            auto ctx = make_context(io, workspace, apply_flags);
            return cmd_apply(ctx, apply_id, apply_all, apply_files, apply_hunks);
        }
        if (*review) {
            auto ctx = make_context(io, workspace, review_flags);
            return cmd_review(ctx, review_id);
        }
        if (*close) {
            auto ctx = make_context(io, workspace, close_flags);
            return cmd_close(ctx, close_id);
        }
        if (*sessions) {
            auto ctx = make_context(io, workspace, sessions_flags);
            return cmd_sessions(ctx);
        }
        if (*serve) {
            auto ctx = make_context(io, workspace, serve_flags);
            return cmd_serve(ctx);
        }
    } catch (const Error& e) {
        io.err << "migmate: error: " << e.what();
        if (e.code() == ErrorCode::ContextMismatch)
            io.err << "\nconflicting file: " << e.detail();
        else if (e.code() == ErrorCode::MissingApiKey)
            io.err << "\nset " << e.detail() << " or pass --mock-llm <transcript>";
        io.err << " [" << to_string(e.code()) << "]\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        io.err << "migmate: error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace migmate::cli
