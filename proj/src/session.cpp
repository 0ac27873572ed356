#include "migmate/session.hpp"

#include "migmate/error.hpp"
#include "migmate/util.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <iostream>

#include <fcntl.h>
#include <unistd.h>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace migmate {

std::string_view to_string(SessionState s)
{
    switch (s) {
    case SessionState::Initializing: return "initializing";
    case SessionState::Running: return "running";
    case SessionState::AwaitingReview: return "awaiting_review";
    case SessionState::Applying: return "applying";
    case SessionState::Done: return "done";
    case SessionState::Aborted: return "aborted";
    }
    return "aborted";
}

SessionState session_state_from_string(std::string_view s)
{
    if (s == "initializing")
        return SessionState::Initializing;
    if (s == "running")
        return SessionState::Running;
    if (s == "awaiting_review")
        return SessionState::AwaitingReview;
    if (s == "applying")
        return SessionState::Applying;
    if (s == "done")
        return SessionState::Done;
    if (s == "aborted")
        return SessionState::Aborted;
    throw Error(ErrorCode::CorruptSession, "unknown session state '" + std::string(s) + "'");
}

bool session_transition_allowed(SessionState from, SessionState to)
{
    if (to == SessionState::Aborted)
        return from != SessionState::Done && from != SessionState::Aborted;
    if (from == SessionState::Aborted)
        return false;
    return static_cast<int>(to) > static_cast<int>(from);
}

fs::path MigrationSession::pristine_path(std::string_view rel) const
{
    return dir / "pristine" / std::string(rel);
}

const PristineFile* MigrationSession::file(std::string_view rel) const
{
    for (const auto& f : files)
        if (f.path == rel)
            return &f;
    return nullptr;
}

json pristine_file_json(const PristineFile& f)
{
    return json{{"path", f.path},
                {"kind", std::string(diff::to_string(f.kind))},
                {"is_test", f.is_test},
                {"send_to_llm", f.send_to_llm},
                {"import_lines", f.import_lines}};
}

PristineFile pristine_file_from_json(const json& j)
{
    PristineFile f;
    f.path = j.at("path").get<std::string>();
    f.kind = j.at("kind").get<std::string>() == "dependency" ? diff::FileKind::Dependency : diff::FileKind::Source;
    f.is_test = j.at("is_test").get<bool>();
    f.send_to_llm = j.at("send_to_llm").get<bool>();
    f.import_lines = j.value("import_lines", std::vector<std::size_t>{});
    return f;
}

SessionStore::SessionStore(fs::path workspace, std::optional<fs::path> workdir)
    : workspace_(fs::absolute(std::move(workspace)).lexically_normal())
{
    if (workdir) {
        workdir_ = workdir->is_absolute() ? *workdir : workspace_ / *workdir;
    } else {
        workdir_ = workspace_ / ".migmate";
    }
    workdir_ = workdir_.lexically_normal();
}

namespace {

std::string make_session_id()
{
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return std::string(buf) + "-" + util::random_hex(3);
}

json read_json_file(const fs::path& path, const std::string& label)
{
    std::string text;
    try {
        text = util::read_file(path);
    } catch (const Error&) {
        throw Error(ErrorCode::CorruptSession, "missing session file " + label, label);
    }
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error(ErrorCode::CorruptSession, "corrupt session file " + label, label);
    if (j.value("schema", 0) != kSchemaVersion)
        throw Error(ErrorCode::CorruptSession, "unsupported schema version in " + label, label);
    return j;
}

bool pid_alive(long pid)
{
    if (pid <= 0)
        return false;
    return ::kill(static_cast<pid_t>(pid), 0) == 0 || errno == EPERM;
}

void collect_files(const fs::path& root, std::map<std::string, std::string>& out)
{
    if (!fs::is_directory(root))
        return;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file())
            out[util::relative_generic(e.path(), root)] = util::read_file(e.path());
    }
}

} // namespace

MigrationSession SessionStore::create(const MigrationOptions& options, const std::vector<PristineFile>& files,
                                      const std::map<std::string, std::string>& pristine, const json& config_origin,
                                      bool force)
{
    MigrationSession s;
    s.id = make_session_id();
    s.workspace = workspace_;
    s.dir = workdir_ / "sessions" / s.id;
    s.options = options;
    s.config_origin = config_origin;
    s.created_at = util::now_iso8601();
    s.files = files;
    s.state = SessionState::Initializing;

    acquire_lock(s.id, force);
    try {
        fs::create_directories(s.dir / "pristine");
        fs::create_directories(s.dir / "rounds");
        fs::create_directories(s.dir / "review");
        for (const auto& [rel, bytes] : pristine)
            util::write_file_atomic(s.pristine_path(rel), bytes);
        json files_json = json::array();
        for (const auto& f : files)
            files_json.push_back(pristine_file_json(f));
        json cfg{{"schema", kSchemaVersion},     {"id", s.id},
                 {"created_at", s.created_at},   {"workspace", workspace_.string()},
                 {"options", to_json(options)},  {"origin", config_origin},
                 {"files", std::move(files_json)}};
        util::write_file_atomic(s.dir / "config", cfg.dump(2) + "\n");
        util::append_file(s.dir / "events.log", "");
        util::append_file(s.dir / "log.txt", "");
        save_state(s);
    } catch (const fs::filesystem_error& e) {
        release_lock(s.id);
        throw Error(ErrorCode::IoError, std::string("cannot create session directory: ") + e.what());
    } catch (...) {
        release_lock(s.id);
        throw;
    }
    return s;
}

void SessionStore::save_state(const MigrationSession& s) const
{
    json j{{"schema", kSchemaVersion},
           {"id", s.id},
           {"state", std::string(to_string(s.state))},
           {"progress",
            {{"round", s.progress.round},
             {"file_index", s.progress.file_index},
             {"file_count", s.progress.file_count},
             {"message", s.progress.message}}},
           {"verdict", s.verdict ? to_json(*s.verdict) : json(nullptr)},
           {"updated_at", util::now_iso8601()}};
    util::write_file_atomic(s.dir / "session", j.dump(2) + "\n");
}

void SessionStore::set_state(MigrationSession& s, SessionState next) const
{
    if (s.state == next)
        return;
    if (!session_transition_allowed(s.state, next))
        throw Error(ErrorCode::InvalidState,
                    "session " + s.id + " cannot move from " + std::string(to_string(s.state)) + " to " +
                        std::string(to_string(next)));
    s.state = next;
    save_state(s);
}

MigrationSession SessionStore::load(const std::string& id) const
{
    fs::path dir = workdir_ / "sessions" / id;
    if (id.empty() || id.find('/') != std::string::npos || !fs::is_directory(dir))
        throw Error(ErrorCode::SessionNotFound, "no session with id '" + id + "'", id);
    MigrationSession s;
    s.id = id;
    s.dir = dir;
    json cfg = read_json_file(dir / "config", "config");
    try {
        if (cfg.at("id").get<std::string>() != id)
            throw Error(ErrorCode::CorruptSession, "config id does not match directory", "config");
        s.workspace = cfg.at("workspace").get<std::string>();
        s.created_at = cfg.at("created_at").get<std::string>();
        s.options = options_from_json(cfg.at("options"));
        s.config_origin = cfg.value("origin", json::object());
        for (const auto& f : cfg.at("files"))
            s.files.push_back(pristine_file_from_json(f));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptSession, std::string("corrupt session file config: ") + e.what(), "config");
    }
    json st = read_json_file(dir / "session", "session");
    try {
        s.state = session_state_from_string(st.at("state").get<std::string>());
        const auto& p = st.at("progress");
        s.progress = Progress{p.value("round", std::string{}), p.value("file_index", std::size_t{0}),
                              p.value("file_count", std::size_t{0}), p.value("message", std::string{})};
        if (st.contains("verdict") && st["verdict"].is_object())
            s.verdict = verdict_from_json(st["verdict"]);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptSession, std::string("corrupt session file session: ") + e.what(), "session");
    }
    if (fs::is_directory(dir / "rounds")) {
        for (const auto& e : fs::directory_iterator(dir / "rounds")) {
            auto name = e.path().filename().string();
            if (e.is_directory() && !name.starts_with("."))
                s.rounds.push_back(name);
        }
        std::sort(s.rounds.begin(), s.rounds.end());
    }
    return s;
}

std::vector<std::string> SessionStore::list() const
{
    std::vector<std::pair<std::string, std::string>> found;
    std::error_code ec;
    fs::path root = workdir_ / "sessions";
    if (!fs::is_directory(root, ec))
        return {};
    for (const auto& e : fs::directory_iterator(root, ec)) {
        if (!e.is_directory())
            continue;
        std::string created;
        try {
            created = json::parse(util::read_file(e.path() / "config")).value("created_at", std::string{});
        } catch (...) {
        }
        found.emplace_back(created, e.path().filename().string());
    }
    std::sort(found.begin(), found.end());
    std::vector<std::string> ids;
    for (auto& [_, id] : found)
        ids.push_back(id);
    return ids;
}

std::optional<std::string> SessionStore::latest() const
{
    auto ids = list();
    if (ids.empty())
        return std::nullopt;
    return ids.back();
}

void SessionStore::archive_round(MigrationSession& s, const RoundRecord& r) const
{
    fs::path rounds = s.dir / "rounds";
    fs::path final_dir = rounds / r.dir_name();
    if (fs::exists(final_dir))
        throw Error(ErrorCode::RoundImmutable, "round " + r.dir_name() + " is already archived", r.dir_name());
    fs::path tmp = rounds / (".tmp-" + r.dir_name() + "-" + util::random_hex(4));
    fs::create_directories(tmp / "files");
    for (const auto& [rel, content] : r.snapshots)
        util::write_file_atomic(tmp / "files" / rel, content);
    json notes = notes_json(r);
    if (r.report) {
        std::string xml = r.report->synthesized || r.report->raw_xml.empty()
                              ? std::string("<?xml version=\"1.0\" encoding=\"utf-8\"?><testsuites name=\"synthesized\"/>")
                              : r.report->raw_xml;
        util::write_file_atomic(tmp / "report.xml", xml);
        notes["report"] = harness::summary_json(*r.report);
        notes["report"]["started_at"] = r.report->started_at;
        notes["report"]["finished_at"] = r.report->finished_at;
    }
    if (r.comparison)
        util::write_file_atomic(tmp / "comparison", harness::to_json(*r.comparison).dump(2) + "\n");
    util::write_file_atomic(tmp / "notes", notes.dump(2) + "\n");
    std::error_code ec;
    fs::rename(tmp, final_dir, ec);
    if (ec) {
        fs::remove_all(tmp, ec);
        throw Error(ErrorCode::RoundImmutable, "round " + r.dir_name() + " could not be archived", r.dir_name());
    }
    s.rounds.push_back(r.dir_name());
}

RoundRecord SessionStore::load_round(const MigrationSession& s, const std::string& dir_name) const
{
    fs::path dir = s.dir / "rounds" / dir_name;
    std::string label = "rounds/" + dir_name + "/notes";
    json notes = [&] {
        try {
            return json::parse(util::read_file(dir / "notes"));
        } catch (...) {
            throw Error(ErrorCode::CorruptSession, "corrupt session file " + label, label);
        }
    }();
    RoundRecord r;
    try {
        r.kind = round_kind_from_string(notes.at("kind").get<std::string>());
        r.index = notes.at("index").get<std::size_t>();
        r.accepted = notes.at("accepted").get<bool>();
        r.warnings = notes.value("warnings", std::vector<std::string>{});
        r.started_at = notes.value("started_at", std::string{});
        r.finished_at = notes.value("finished_at", std::string{});
        for (const auto& f : notes.at("files")) {
            FileOutcome o;
            o.path = f.at("path").get<std::string>();
            o.status = f.at("status").get<std::string>();
            o.elided = f.value("elided", false);
            if (f.contains("warning"))
                o.warning = f["warning"].get<std::string>();
            if (f.contains("raw_response"))
                o.raw_response = f["raw_response"].get<std::string>();
            r.files.push_back(std::move(o));
        }
        if (notes.value("has_report", false)) {
            auto xml = util::read_file(dir / "report.xml");
            bool synthesized = notes.value("report_synthesized", false);
            harness::TestReport rep = synthesized ? harness::TestReport{} : harness::parse_junit_xml(xml);
            rep.round_label = std::string(to_string(r.kind));
            rep.synthesized = synthesized;
            rep.raw_xml = synthesized ? std::string() : xml;
            if (notes.contains("report")) {
                const auto& summary = notes["report"];
                rep.exit_code = summary.value("exit_code", 0);
                rep.started_at = summary.value("started_at", std::string{});
                rep.finished_at = summary.value("finished_at", std::string{});
                for (const auto& row : summary.value("cases", json::array())) {
                    for (auto& tc : rep.cases) {
                        if (tc.id != row.value("id", std::string{}))
                            continue;
                        if (row.contains("file") && row["file"].is_string())
                            tc.file = row["file"].get<std::string>();
                        if (row.contains("line") && row["line"].is_number())
                            tc.line = row["line"].get<int>();
                    }
                }
            }
            r.report = std::move(rep);
        }
        if (fs::exists(dir / "comparison"))
            r.comparison = harness::comparison_from_json(json::parse(util::read_file(dir / "comparison")));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptSession)
            throw;
        throw Error(ErrorCode::CorruptSession, "corrupt round " + dir_name + ": " + e.what(), label);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::CorruptSession, "corrupt round " + dir_name + ": " + e.what(), label);
    }
    collect_files(dir / "files", r.snapshots);
    return r;
}

std::vector<RoundRecord> SessionStore::load_rounds(const MigrationSession& s) const
{
    std::vector<RoundRecord> out;
    for (const auto& name : s.rounds)
        out.push_back(load_round(s, name));
    return out;
}

void SessionStore::record_event(const MigrationSession& s, TelemetryEvent event) const noexcept
{
    try {
        std::lock_guard lock(write_mutex_);
        fs::path path = s.dir / "events.log";
        std::string last_at;
        if (fs::exists(path)) {
            auto text = util::read_file(path);
            auto lines = util::split_lines_keep(text);
            for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
                if (util::trim(*it).empty())
                    continue;
                auto j = json::parse(*it, nullptr, false);
                if (!j.is_discarded())
                    last_at = j.value("at", std::string{});
                break;
            }
        }
        if (event.at.empty())
            event.at = util::now_iso8601();
        if (event.at < last_at)
            event.at = last_at;
        json j{{"schema", kSchemaVersion}, {"session", s.id}, {"kind", event.kind}, {"at", event.at},
               {"attrs", event.attrs}};
        util::append_file(path, j.dump() + "\n");
    } catch (const std::exception& e) {
        std::cerr << "warning: telemetry event dropped: " << e.what() << "\n";
    }
}

std::vector<TelemetryEvent> SessionStore::events(const MigrationSession& s) const
{
    std::vector<TelemetryEvent> out;
    fs::path path = s.dir / "events.log";
    if (!fs::exists(path))
        return out;
    for (const auto& line : util::split_lines_keep(util::read_file(path))) {
        if (util::trim(line).empty())
            continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            continue;
        out.push_back(TelemetryEvent{j.value("kind", std::string{}), j.value("attrs", json::object()),
                                     j.value("at", std::string{})});
    }
    return out;
}

void SessionStore::log(const MigrationSession& s, std::string_view message) const noexcept
{
    try {
        std::lock_guard lock(write_mutex_);
        std::string line = "[" + util::now_iso8601() + "] " + std::string(message);
        if (line.empty() || line.back() != '\n')
            line += '\n';
        util::append_file(s.dir / "log.txt", line);
    } catch (const std::exception& e) {
        std::cerr << "warning: log write failed: " << e.what() << "\n";
    }
}

void SessionStore::acquire_lock(const std::string& session_id, bool force) const
{
    fs::create_directories(workdir_);
    fs::path path = workdir_ / "lock";
    json body{{"session", session_id}, {"pid", static_cast<long>(::getpid())}, {"token", util::random_hex(8)},
              {"acquired_at", util::now_iso8601()}};
    std::string text = body.dump() + "\n";
    for (int attempt = 0; attempt < 2; ++attempt) {
        int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
        if (fd >= 0) {
            ssize_t n = ::write(fd, text.data(), text.size());
            ::close(fd);
            if (n != static_cast<ssize_t>(text.size()))
                throw Error(ErrorCode::IoError, "cannot write lock file", path.string());
            return;
        }
        if (errno != EEXIST)
            throw Error(ErrorCode::IoError, "cannot create lock file", path.string());
        json holder = json::parse([&] {
            try {
                return util::read_file(path);
            } catch (...) {
                return std::string("{}");
            }
        }(), nullptr, false);
        std::string holder_id = holder.is_object() ? holder.value("session", std::string{}) : std::string{};
        long pid = holder.is_object() ? holder.value("pid", 0L) : 0L;
        bool alive = pid_alive(pid);
        bool own_stale = !alive && holder_id == session_id;
        if (alive)
            throw Error(ErrorCode::SessionAlreadyRunning,
                        "session " + holder_id + " is already running in this workspace (pid " + std::to_string(pid) + ")",
                        holder_id);
        if (!force && !own_stale)
            throw Error(ErrorCode::SessionAlreadyRunning,
                        "stale lock left by session " + holder_id + "; rerun with --force to reclaim it", holder_id);
        std::error_code ec;
        fs::remove(path, ec);
    }
    throw Error(ErrorCode::SessionAlreadyRunning, "could not acquire the workspace lock", path.string());
}

void SessionStore::release_lock(const std::string& session_id) const noexcept
{
    try {
        fs::path path = workdir_ / "lock";
        if (!fs::exists(path))
            return;
        auto j = json::parse(util::read_file(path), nullptr, false);
        if (j.is_object() && j.value("session", std::string{}) == session_id &&
            j.value("pid", 0L) == static_cast<long>(::getpid())) {
            std::error_code ec;
            fs::remove(path, ec);
        }
    } catch (...) {
    }
}

std::optional<std::string> SessionStore::live_lock_holder() const
{
    fs::path path = workdir_ / "lock";
    if (!fs::exists(path))
        return std::nullopt;
    json j;
    try {
        j = json::parse(util::read_file(path), nullptr, false);
    } catch (...) {
        return std::nullopt;
    }
    if (!j.is_object() || !pid_alive(j.value("pid", 0L)))
        return std::nullopt;
    return j.value("session", std::string{});
}

bool SessionStore::interrupted(const MigrationSession& s) const
{
    if (s.state != SessionState::Running && s.state != SessionState::Initializing)
        return false;
    auto holder = live_lock_holder();
    return !holder || *holder != s.id;
}

} // namespace migmate
