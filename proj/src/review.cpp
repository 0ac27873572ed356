#include "migmate/review.hpp"

#include "migmate/error.hpp"
#include "migmate/util.hpp"

#include <algorithm>
#include <filesystem>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace migmate {

const diff::FileDiff* ReviewSet::file(std::string_view path) const
{
    for (const auto& f : files)
        if (f.path == path)
            return &f;
    return nullptr;
}

diff::FileDiff* ReviewSet::file(std::string_view path)
{
    for (auto& f : files)
        if (f.path == path)
            return &f;
    return nullptr;
}

diff::Hunk* ReviewSet::hunk(std::string_view id)
{
    for (auto& f : files)
        if (auto* h = f.find(id))
            return h;
    return nullptr;
}

std::size_t ReviewSet::count(diff::HunkState s) const
{
    std::size_t n = 0;
    for (const auto& f : files)
        for (const auto& h : f.hunks)
            if (h.state == s)
                ++n;
    return n;
}

ReviewSet build_review_set(const MigrationSession& session, const std::map<std::string, std::string>& snapshots,
                           std::optional<std::size_t> round_index)
{
    ReviewSet review;
    review.round_index = round_index;
    for (const auto& [path, migrated] : snapshots) {
        const PristineFile* pf = session.file(path);
        std::string original = util::read_file(session.pristine_path(path));
        auto kind = pf ? pf->kind : diff::FileKind::Source;
        auto fd = diff::make_file_diff(path, original, migrated, kind, session.options.context_lines);
        if (!fd.hunks.empty())
            review.files.push_back(std::move(fd));
    }
    return review;
}

void save_review(const MigrationSession& session, const ReviewSet& review)
{
    json files = json::array();
    for (const auto& f : review.files) {
        json hunks = json::array();
        for (const auto& h : f.hunks)
            hunks.push_back({{"id", h.id}, {"header", h.header()}, {"state", std::string(diff::to_string(h.state))}});
        files.push_back({{"path", f.path},
                         {"kind", std::string(diff::to_string(f.kind))},
                         {"eol", f.eol == "\r\n" ? "crlf" : "lf"},
                         {"hunks", std::move(hunks)}});
    }
    json j{{"schema", kSchemaVersion},
           {"round_index", review.round_index ? json(*review.round_index) : json(nullptr)},
           {"files", std::move(files)}};
    util::write_file_atomic(session.dir / "review" / "hunks", j.dump(2) + "\n");
}

ReviewSet load_review(const SessionStore& store, const MigrationSession& session)
{
    fs::path path = session.dir / "review" / "hunks";
    if (!fs::exists(path))
        return {};
    const std::string label = "review/hunks";
    json j = json::parse(util::read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("schema", 0) != kSchemaVersion)
        throw Error(ErrorCode::CorruptSession, "corrupt session file " + label, label);

    std::optional<std::size_t> index;
    if (j.contains("round_index") && j["round_index"].is_number())
        index = j["round_index"].get<std::size_t>();
    ReviewSet review;
    review.round_index = index;
    if (index) {
        char prefix[8];
        std::snprintf(prefix, sizeof prefix, "%02zu-", *index);
        auto it = std::find_if(session.rounds.begin(), session.rounds.end(),
                               [&](const std::string& r) { return r.starts_with(prefix); });
        if (it == session.rounds.end())
            throw Error(ErrorCode::CorruptSession, "review refers to a missing round", label);
        review = build_review_set(session, store.load_round(session, *it).snapshots, index);
    }
    try {
        for (const auto& f : j.at("files")) {
            for (const auto& h : f.at("hunks")) {
                auto* hunk = review.hunk(h.at("id").get<std::string>());
                if (!hunk)
                    throw Error(ErrorCode::CorruptSession, "review names unknown hunk " + h.at("id").get<std::string>(),
                                label);
                hunk->state = diff::hunk_state_from_string(h.at("state").get<std::string>());
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptSession, std::string("corrupt session file review/hunks: ") + e.what(), label);
    }
    return review;
}

json to_json(const ReviewSet& review)
{
    json files = json::array();
    for (const auto& f : review.files) {
        json hunks = json::array();
        for (const auto& h : f.hunks) {
            json lines = json::array();
            for (const auto& l : h.lines) {
                const char* tag = l.kind == diff::LineKind::Added     ? "add"
                                  : l.kind == diff::LineKind::Removed ? "del"
                                                                      : "context";
                json row{{"tag", tag}, {"text", l.text}};
                if (l.no_newline)
                    row["no_newline"] = true;
                lines.push_back(std::move(row));
            }
            hunks.push_back({{"id", h.id},
                             {"header", h.header()},
                             {"old_start", h.old_start},
                             {"old_len", h.old_len},
                             {"new_start", h.new_start},
                             {"new_len", h.new_len},
                             {"lines", std::move(lines)},
                             {"state", std::string(diff::to_string(h.state))}});
        }
        files.push_back({{"path", f.path}, {"kind", std::string(diff::to_string(f.kind))}, {"hunks", std::move(hunks)}});
    }
    return json{{"round_index", review.round_index ? json(*review.round_index) : json(nullptr)},
                {"files", std::move(files)}};
}

ReviewController::ReviewController(const SessionStore& store, MigrationSession session)
    : store_(store), session_(std::move(session))
{
    review_ = load_review(store_, session_);
    for (const auto& f : review_.files)
        pristine_[f.path] = util::read_file(session_.pristine_path(f.path));
}

void ReviewController::event(std::string kind, json attrs) const
{
    attrs["trigger"] = trigger_;
    store_.record_event(session_, TelemetryEvent{std::move(kind), std::move(attrs), {}});
}

void ReviewController::require_reviewable() const
{
    if (session_.state == SessionState::Done)
        throw Error(ErrorCode::AlreadyApplied, "session " + session_.id + " review is already finished", session_.id);
    if (session_.state != SessionState::AwaitingReview && session_.state != SessionState::Applying)
        throw Error(ErrorCode::InvalidState,
                    "session " + session_.id + " is " + std::string(to_string(session_.state)) + ", not awaiting review",
                    session_.id);
}

std::string ReviewController::applied_content(const diff::FileDiff& file, const std::set<std::string>& extra) const
{
    std::set<std::string> ids = extra;
    for (const auto& h : file.hunks)
        if (h.state == diff::HunkState::Applied)
            ids.insert(h.id);
    if (ids.empty())
        return pristine_.at(file.path);
    return diff::restore_eol(diff::apply_selection(file, ids), file.eol);
}

std::string ReviewController::expected_on_disk(const diff::FileDiff& file) const
{
    return applied_content(file, {});
}

void ReviewController::check_disk(const diff::FileDiff& file) const
{
    fs::path target = session_.workspace / file.path;
    std::string current;
    try {
        current = util::read_file(target);
    } catch (const Error&) {
        throw Error(ErrorCode::ContextMismatch, file.path + " is missing from the workspace", file.path);
    }
    if (current != expected_on_disk(file))
        throw Error(ErrorCode::ContextMismatch, file.path + " was modified outside the review", file.path);
}

void ReviewController::mark_applying()
{
    if (session_.state == SessionState::AwaitingReview)
        store_.set_state(session_, SessionState::Applying);
}

void ReviewController::finish(ApplyResult& result, bool auto_closed)
{
    std::size_t discarded = 0;
    for (auto& f : review_.files) {
        for (auto& h : f.hunks) {
            if (h.state == diff::HunkState::Pending || h.state == diff::HunkState::Accepted) {
                h.state = diff::HunkState::Rejected;
                result.changed.push_back({h.id, h.state});
                ++discarded;
            }
        }
    }
    save_review(session_, review_);
    store_.set_state(session_, SessionState::Done);
    result.state = session_.state;
    event("preview_closed", {{"applied", review_.count(diff::HunkState::Applied)},
                             {"discarded", discarded},
                             {"auto", auto_closed}});
}

ApplyResult ReviewController::write_incremental(const std::vector<std::string>& ids)
{
    require_reviewable();
    std::map<std::string, std::set<std::string>> by_file;
    for (const auto& id : ids) {
        diff::Hunk* h = review_.hunk(id);
        if (!h)
            throw Error(ErrorCode::UnknownHunkId, "unknown hunk id " + id, id);
        if (h->state != diff::HunkState::Pending)
            throw Error(ErrorCode::AlreadyApplied, "hunk " + id + " is already " + std::string(diff::to_string(h->state)),
                        id);
        by_file[id.substr(0, id.rfind(':'))].insert(id);
    }
    for (const auto& [path, _] : by_file)
        check_disk(*review_.file(path));

    ApplyResult result;
    for (const auto& [path, selected] : by_file) {
        diff::FileDiff& f = *review_.file(path);
        util::write_file_atomic(session_.workspace / path, applied_content(f, selected));
        result.written_files.push_back(path);
        for (auto& h : f.hunks) {
            if (selected.count(h.id)) {
                h.state = diff::HunkState::Applied;
                result.changed.push_back({h.id, h.state});
            }
        }
    }
    mark_applying();
    save_review(session_, review_);
    result.state = session_.state;
    return result;
}

ApplyResult ReviewController::apply_hunks(const std::vector<std::string>& ids)
{
    std::vector<std::string> unique;
    for (const auto& id : ids)
        if (std::find(unique.begin(), unique.end(), id) == unique.end())
            unique.push_back(id);
    if (unique.empty())
        throw Error(ErrorCode::InvalidConfig, "no hunk ids given");
    auto result = write_incremental(unique);
    for (const auto& id : unique)
        event("hunk_applied", {{"granularity", "hunk"}, {"hunk", id}, {"path", id.substr(0, id.rfind(':'))}});
    return result;
}

ApplyResult ReviewController::apply_file(const std::string& path)
{
    require_reviewable();
    const diff::FileDiff* f = review_.file(path);
    if (!f)
        throw Error(ErrorCode::UnknownHunkId, "no reviewable changes for " + path, path);
    std::vector<std::string> ids;
    for (const auto& h : f->hunks)
        if (h.state == diff::HunkState::Pending)
            ids.push_back(h.id);
    if (ids.empty())
        throw Error(ErrorCode::AlreadyApplied, "every hunk of " + path + " is already applied", path);
    auto result = write_incremental(ids);
    event("file_applied", {{"granularity", "file"}, {"path", path}, {"hunks", ids.size()}});
    return result;
}

ApplyResult ReviewController::apply_all()
{
    require_reviewable();
    std::vector<std::string> ids;
    for (const auto& f : review_.files)
        for (const auto& h : f.hunks)
            if (h.state == diff::HunkState::Pending)
                ids.push_back(h.id);
    ApplyResult result;
    if (!ids.empty())
        result = write_incremental(ids);
    event("all_applied", {{"granularity", "all"}, {"hunks", ids.size()}});
    finish(result, true);
    return result;
}

ApplyResult ReviewController::apply_bulk(const std::set<std::string>& accepted, std::string_view granularity)
{
    require_reviewable();
    std::map<std::string, std::set<std::string>> by_file;
    for (const auto& id : accepted) {
        diff::Hunk* h = review_.hunk(id);
        if (!h)
            throw Error(ErrorCode::UnknownHunkId, "unknown hunk id " + id, id);
        if (h->state != diff::HunkState::Pending && h->state != diff::HunkState::Accepted)
            throw Error(ErrorCode::AlreadyApplied, "hunk " + id + " is already " + std::string(diff::to_string(h->state)),
                        id);
        by_file[id.substr(0, id.rfind(':'))].insert(id);
    }
    for (const auto& [path, _] : by_file)
        check_disk(*review_.file(path));

    std::map<std::string, std::string> contents;
    for (const auto& [path, selected] : by_file)
        contents[path] = applied_content(*review_.file(path), selected);

    ApplyResult result;
    for (const auto& [path, text] : contents) {
        util::write_file_atomic(session_.workspace / path, text);
        result.written_files.push_back(path);
    }
    for (auto& f : review_.files) {
        for (auto& h : f.hunks) {
            if (!accepted.count(h.id))
                continue;
            h.state = diff::HunkState::Applied;
            result.changed.push_back({h.id, h.state});
        }
    }
    if (!accepted.empty()) {
        bool everything = review_.count(diff::HunkState::Pending) == 0;
        std::string kind = everything || granularity == "all" ? "all_applied"
                           : granularity == "file"            ? "file_applied"
                                                              : "hunk_applied";
        event(kind, {{"granularity", std::string(granularity)}, {"style", "bulk"}, {"hunks", accepted.size()}});
    }
    mark_applying();
    finish(result, true);
    return result;
}

ApplyResult ReviewController::apply(std::string_view scope, const std::vector<std::string>& ids)
{
    const bool bulk = session_.options.preview_style == PreviewStyle::Bulk;
    if (scope == "all")
        return bulk ? apply_bulk([&] {
            std::set<std::string> all;
            for (const auto& f : review_.files)
                for (const auto& h : f.hunks)
                    if (h.state == diff::HunkState::Pending)
                        all.insert(h.id);
            return all;
        }(), "all")
                    : apply_all();
    if (ids.empty())
        throw Error(ErrorCode::InvalidConfig, "scope '" + std::string(scope) + "' needs at least one id");
    if (scope == "hunk") {
        if (bulk)
            return apply_bulk(std::set<std::string>(ids.begin(), ids.end()), "hunk");
        return apply_hunks(ids);
    }
    if (scope == "file") {
        if (bulk) {
            std::set<std::string> selected;
            for (const auto& path : ids) {
                const diff::FileDiff* f = review_.file(path);
                if (!f)
                    throw Error(ErrorCode::UnknownHunkId, "no reviewable changes for " + path, path);
                for (const auto& h : f->hunks)
                    selected.insert(h.id);
            }
            return apply_bulk(selected, "file");
        }
        ApplyResult merged;
        for (const auto& path : ids) {
            auto r = apply_file(path);
            merged.changed.insert(merged.changed.end(), r.changed.begin(), r.changed.end());
            merged.written_files.insert(merged.written_files.end(), r.written_files.begin(), r.written_files.end());
            merged.state = r.state;
        }
        return merged;
    }
    throw Error(ErrorCode::InvalidConfig, "scope must be hunk, file or all, got '" + std::string(scope) + "'");
}

ApplyResult ReviewController::close()
{
    if (session_.state != SessionState::AwaitingReview && session_.state != SessionState::Applying)
        throw Error(ErrorCode::InvalidState,
                    "session " + session_.id + " is " + std::string(to_string(session_.state)) + " and cannot be closed",
                    session_.id);
    ApplyResult result;
    finish(result, false);
    return result;
}

} // namespace migmate
