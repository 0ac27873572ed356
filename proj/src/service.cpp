#include "migmate/service.hpp"

#include "migmate/depfile.hpp"
#include "migmate/error.hpp"
#include "migmate/pipeline.hpp"
#include "migmate/review.hpp"
#include "migmate/util.hpp"

#include <httplib.h>

#include <iostream>
#include <set>

#include <sys/socket.h>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace migmate {

int http_status_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::SessionNotFound:
    case ErrorCode::UnknownHunkId: return 404;
    case ErrorCode::ContextMismatch:
    case ErrorCode::AlreadyApplied:
    case ErrorCode::InvalidState:
    case ErrorCode::SessionAlreadyRunning: return 409;
    case ErrorCode::SourceNotDeclared:
    case ErrorCode::NoDependencyFile:
    case ErrorCode::InvalidToml: return 422;
    case ErrorCode::InvalidConfig:
    case ErrorCode::MissingApiKey: return 400;
    default: return 500;
    }
}

namespace {

json counts_json(const harness::Counts& c)
{
    return json{{"passed", c.passed}, {"failed", c.failed}, {"errored", c.errored}, {"skipped", c.skipped},
                {"total", c.total()}};
}

json anchor(const harness::TestCaseResult* tc, json& row)
{
    if (tc && tc->file)
        row["file"] = *tc->file;
    if (tc && tc->line)
        row["line"] = *tc->line;
    return row;
}

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e)
{
    send_json(res, http_status_for(e.code()),
              json{{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"detail", e.detail()}});
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message)
{
    send_json(res, status, json{{"code", code}, {"message", message}, {"detail", ""}});
}

template <class Handler>
httplib::Server::Handler guarded(Handler handler)
{
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const Error& e) {
            send_error(res, e);
        } catch (const json::exception& e) {
            send_error(res, 400, "InvalidRequest", std::string("malformed request body: ") + e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "Internal", e.what());
        }
    };
}

json parse_body(const httplib::Request& req)
{
    if (util::trim(req.body).empty())
        return json::object();
    json j = json::parse(req.body);
    if (!j.is_object())
        throw Error(ErrorCode::InvalidConfig, "request body must be a JSON object");
    return j;
}

} // namespace

json session_view(const SessionStore& store, const MigrationSession& s)
{
    bool regressed = s.verdict && s.verdict->status == VerdictStatus::Regressed;
    return json{
        {"schema", kSchemaVersion},
        {"id", s.id},
        {"state", std::string(to_string(s.state))},
        {"created_at", s.created_at},
        {"source", s.options.source},
        {"target", s.options.target},
        {"model", s.options.llm.model},
        {"trigger", s.options.trigger},
        {"preview_style", std::string(to_string(s.options.preview_style))},
        {"verdict", s.verdict ? to_json(*s.verdict) : json(nullptr)},
        {"progress",
         {{"round", s.progress.round},
          {"file_index", s.progress.file_index},
          {"file_count", s.progress.file_count},
          {"message", s.progress.message}}},
        {"rounds", s.rounds},
        {"interrupted", store.interrupted(s)},
        {"preview_suppressed", regressed && !s.options.show_preview_on_failure},
    };
}

json tests_view(const SessionStore& store, const MigrationSession& s)
{
    auto rounds = store.load_rounds(s);
    const RoundRecord* baseline = nullptr;
    for (const auto& r : rounds)
        if (r.kind == RoundKind::Premig)
            baseline = &r;
    const RoundRecord* final = best_round(rounds);
    if (s.verdict && s.verdict->final_round_index)
        for (const auto& r : rounds)
            if (r.index == *s.verdict->final_round_index)
                final = &r;

    json round_rows = json::array();
    for (const auto& r : rounds) {
        json files = json::array();
        for (const auto& f : r.files) {
            json row{{"path", f.path}, {"status", f.status}, {"elided", f.elided}};
            if (f.warning)
                row["warning"] = *f.warning;
            files.push_back(std::move(row));
        }
        round_rows.push_back({{"name", r.dir_name()},
                              {"kind", std::string(to_string(r.kind))},
                              {"index", r.index},
                              {"accepted", r.accepted},
                              {"has_report", r.report.has_value()},
                              {"synthesized", r.report && r.report->synthesized},
                              {"exit_code", r.report ? json(r.report->exit_code) : json(nullptr)},
                              {"counts", r.report ? counts_json(r.report->counts()) : json(nullptr)},
                              {"comparison", r.comparison ? harness::to_json(*r.comparison) : json(nullptr)},
                              {"warnings", r.warnings},
                              {"files", std::move(files)}});
    }

    const harness::TestReport* pre = baseline && baseline->report ? &*baseline->report : nullptr;
    const harness::TestReport* post = final && final->report ? &*final->report : nullptr;

    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (const auto* rep : {pre, post})
        if (rep)
            for (const auto& c : rep->cases)
                if (seen.insert(c.id).second)
                    ids.push_back(c.id);

    json cases = json::array();
    for (const auto& id : ids) {
        const auto* a = pre ? pre->find(id) : nullptr;
        const auto* b = post ? post->find(id) : nullptr;
        json row{{"id", id},
                 {"pre_status", a ? json(std::string(harness::to_string(a->status))) : json(nullptr)},
                 {"post_status", b ? json(std::string(harness::to_string(b->status))) : json(nullptr)}};
        const auto* shown = b ? b : a;
        if (shown && shown->message)
            row["message"] = *shown->message;
        anchor(shown, row);
        cases.push_back(std::move(row));
    }

    json regressions = json::array();
    if (final && final->comparison) {
        auto add = [&](const std::string& id, bool missing) {
            const auto* a = pre ? pre->find(id) : nullptr;
            const auto* b = post ? post->find(id) : nullptr;
            json row{{"id", id},
                     {"missing", missing},
                     {"pre_status", a ? json(std::string(harness::to_string(a->status))) : json(nullptr)},
                     {"post_status", b ? json(std::string(harness::to_string(b->status))) : json(nullptr)}};
            if (b && b->message)
                row["message"] = *b->message;
            else if (missing)
                row["message"] = "test no longer reported";
            anchor(b ? b : a, row);
            regressions.push_back(std::move(row));
        };
        for (const auto& id : final->comparison->regressions)
            add(id, false);
        for (const auto& id : final->comparison->missing_passing)
            add(id, true);
    }

    return json{
        {"schema", kSchemaVersion},
        {"id", s.id},
        {"verdict", s.verdict ? to_json(*s.verdict) : json(nullptr)},
        {"baseline", pre ? json{{"round", baseline->dir_name()}, {"counts", counts_json(pre->counts())}}
                         : json(nullptr)},
        {"final", post ? json{{"round", final->dir_name()}, {"counts", counts_json(post->counts())}} : json(nullptr)},
        {"regressions", std::move(regressions)},
        {"cases", std::move(cases)},
        {"rounds", std::move(round_rows)},
    };
}

ReviewService::ReviewService(fs::path workspace, std::optional<fs::path> workdir, ServiceOptions options)
    : workspace_(fs::absolute(workspace).lexically_normal()),
      store_(workspace_, std::move(workdir)),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>())
{
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    routes();
}

ReviewService::~ReviewService()
{
    stop();
    join_pipelines();
}

std::mutex& ReviewService::session_mutex(const std::string& id)
{
    std::lock_guard lock(mutex_);
    auto& m = session_mutexes_[id];
    if (!m)
        m = std::make_unique<std::mutex>();
    return *m;
}

int ReviewService::bind()
{
    if (options_.port == 0) {
        port_ = server_->bind_to_any_port(options_.host);
        if (port_ <= 0)
            throw Error(ErrorCode::PortInUse, "could not bind any port on " + options_.host);
    } else {
        if (!server_->bind_to_port(options_.host, options_.port))
            throw Error(ErrorCode::PortInUse,
                        "port " + std::to_string(options_.port) + " on " + options_.host + " is already in use",
                        std::to_string(options_.port));
        port_ = options_.port;
    }
    return port_;
}

void ReviewService::serve()
{
    server_->listen_after_bind();
}

int ReviewService::start()
{
    int p = bind();
    listener_ = std::thread([this] { serve(); });
    server_->wait_until_ready();
    return p;
}

void ReviewService::stop()
{
    if (server_)
        server_->stop();
    if (listener_.joinable())
        listener_.join();
}

void ReviewService::join_pipelines()
{
    std::vector<std::thread> running;
    {
        std::lock_guard lock(launch_mutex_);
        running.swap(pipelines_);
    }
    for (auto& t : running)
        if (t.joinable())
            t.join();
}

std::string ReviewService::url() const
{
    return "http://" + options_.host + ":" + std::to_string(port_) + "/";
}

void ReviewService::routes()
{
    auto& svr = *server_;

    svr.Get("/", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content("migmate review service for " + workspace_.string() + "\nAPI under /api\n", "text/plain");
    });

    svr.Get("/api/health", guarded([this](const httplib::Request&, httplib::Response& res) {
                send_json(res, 200, json{{"status", "ok"}, {"workspace", workspace_.string()}, {"schema", kSchemaVersion}});
            }));

    svr.Get("/api/dependencies", guarded([this](const httplib::Request&, httplib::Response& res) {
                json files = json::array();
                for (const auto& df : depfile::discover(workspace_)) {
                    json entries = json::array();
                    for (const auto& e : df.entries)
                        entries.push_back({{"name", e.name},
                                           {"raw_name", e.raw_name},
                                           {"version_spec", e.version_spec ? json(*e.version_spec) : json(nullptr)},
                                           {"line", e.line}});
                    files.push_back({{"path", df.path},
                                     {"kind", std::string(depfile::to_string(df.kind))},
                                     {"entries", std::move(entries)},
                                     {"warnings", df.warnings}});
                }
                send_json(res, 200, json{{"files", std::move(files)}});
            }));

    svr.Get("/api/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
                json list = json::array();
                for (const auto& id : store_.list()) {
                    try {
                        list.push_back(session_view(store_, store_.load(id)));
                    } catch (const Error& e) {
                        list.push_back({{"id", id}, {"error", {{"code", std::string(to_string(e.code()))},
                                                                {"message", e.what()},
                                                                {"detail", e.detail()}}}});
                    }
                }
                send_json(res, 200, json{{"sessions", std::move(list)}});
            }));

    svr.Post("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 json body = parse_body(req);
                 config::Layer flags = options_.flag_layer;
                 if (body.contains("options")) {
                     if (!body["options"].is_object())
                         throw Error(ErrorCode::InvalidConfig, "options must be an object");
                     for (const auto& [k, v] : body["options"].items()) {
                         const auto* key = config::find_key(k);
                         if (!key)
                             throw Error(ErrorCode::InvalidConfig, "unknown option '" + k + "'", k);
                         flags[k] = config::coerce(*key, v);
                     }
                 }
                 auto cfg = config::resolve(options_.file_layer, options_.env_layer, flags, false);
                 cfg.options.source = body.value("source", std::string{});
                 cfg.options.target = body.value("target", std::string{});
                 cfg.options.trigger = "api";
                 cfg.options.apply_mode = ApplyMode::None;

                 std::lock_guard lock(launch_mutex_);
                 MigrationSession session = start_session(store_, cfg.options, cfg.origin, cfg.force);
                 std::string id = session.id;
                 pipelines_.emplace_back([this, session = std::move(session)]() mutable {
                     try {
                         Pipeline(store_, session).run();
                     } catch (const std::exception& e) {
                         std::cerr << "migmate: session " << session.id << " failed: " << e.what() << "\n";
                         store_.release_lock(session.id);
                     }
                 });
                 send_json(res, 202, json{{"id", id}, {"state", "initializing"}, {"href", "/api/sessions/" + id}});
             }));

    svr.Get(R"(/api/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, session_view(store_, store_.load(req.matches[1])));
            }));

    svr.Get(R"(/api/sessions/([^/]+)/diff)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto s = store_.load(req.matches[1]);
                json view = to_json(load_review(store_, s));
                view["schema"] = kSchemaVersion;
                view["id"] = s.id;
                view["state"] = std::string(to_string(s.state));
                send_json(res, 200, view);
            }));

    svr.Get(R"(/api/sessions/([^/]+)/tests)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto s = store_.load(req.matches[1]);
                json view = tests_view(store_, s);
                store_.record_event(s, TelemetryEvent{"tests_viewed", {{"trigger", "api"}}, {}});
                send_json(res, 200, view);
            }));

    svr.Get(R"(/api/sessions/([^/]+)/log)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto s = store_.load(req.matches[1]);
                std::string text;
                if (fs::exists(s.dir / "log.txt"))
                    text = util::read_file(s.dir / "log.txt");
                res.set_content(text, "text/plain; charset=utf-8");
            }));

    svr.Post(R"(/api/sessions/([^/]+)/apply)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::string id = req.matches[1];
                 json body = parse_body(req);
                 std::string scope = body.value("scope", std::string{});
                 std::vector<std::string> ids;
                 if (body.contains("ids"))
                     ids = body["ids"].get<std::vector<std::string>>();
                 std::lock_guard lock(session_mutex(id));
                 ReviewController ctrl(store_, store_.load(id));
                 ctrl.set_trigger("api");
                 auto result = ctrl.apply(scope, ids);
                 json changed = json::array();
                 for (const auto& c : result.changed)
                     changed.push_back({{"id", c.id}, {"state", std::string(diff::to_string(c.state))}});
                 send_json(res, 200,
                           json{{"id", id},
                                {"state", std::string(to_string(result.state))},
                                {"changed", std::move(changed)},
                                {"written", result.written_files},
                                {"files", to_json(ctrl.review())["files"]}});
             }));

    svr.Post(R"(/api/sessions/([^/]+)/close)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::string id = req.matches[1];
                 std::lock_guard lock(session_mutex(id));
                 ReviewController ctrl(store_, store_.load(id));
                 ctrl.set_trigger("api");
                 auto result = ctrl.close();
                 send_json(res, 200,
                           json{{"id", id},
                                {"state", std::string(to_string(result.state))},
                                {"discarded", result.changed.size()}});
             }));

    svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (res.body.empty() && res.status == 404)
            send_error(res, 404, "NotFound", "no route for " + req.method + " " + req.path);
    });
}

} // namespace migmate
