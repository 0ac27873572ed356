#include "migmate/pipeline.hpp"

#include "migmate/error.hpp"
#include "migmate/postprocess.hpp"
#include "migmate/process.hpp"
#include "migmate/scanner.hpp"
#include "migmate/util.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace migmate {

namespace {

bool is_shadow_excluded(const fs::path& p, const fs::path& workdir)
{
    auto name = p.filename().string();
    return name == ".git" || name == "__pycache__" || name == ".pytest_cache" || p == workdir;
}

void copy_tree(const fs::path& from, const fs::path& to, const fs::path& workdir)
{
    fs::create_directories(to);
    for (auto it = fs::recursive_directory_iterator(from); it != fs::recursive_directory_iterator(); ++it) {
        const fs::path& src = it->path();
        if (is_shadow_excluded(src, workdir)) {
            if (it->is_directory())
                it.disable_recursion_pending();
            continue;
        }
        fs::path dst = to / fs::relative(src, from);
        if (it->is_symlink())
            fs::copy_symlink(src, dst);
        else if (it->is_directory())
            fs::create_directories(dst);
        else if (it->is_regular_file())
            fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
    }
}

std::size_t score_of(const RoundRecord& r)
{
    return r.comparison ? r.comparison->regression_score() : static_cast<std::size_t>(-1);
}

bool regressed(const RoundRecord& r)
{
    return !r.comparison || r.comparison->verdict == harness::Verdict::Regressed;
}

const RoundRecord* find_round(const std::vector<RoundRecord>& rounds, RoundKind kind)
{
    for (const auto& r : rounds)
        if (r.kind == kind)
            return &r;
    return nullptr;
}

void maybe_exit_after(RoundKind kind)
{
    const char* v = std::getenv("MIGMATE_TEST_EXIT_AFTER_ROUND");
    if (v && to_string(kind) == v)
        std::_Exit(86);
}

} // namespace

PreparedMigration prepare_migration(const fs::path& workspace, const MigrationOptions& options, const fs::path& workdir)
{
    if (util::trim(options.source).empty() || util::trim(options.target).empty())
        throw Error(ErrorCode::InvalidConfig, "both a source and a target library are required");
    if (depfile::normalize_name(options.source) == depfile::normalize_name(options.target))
        throw Error(ErrorCode::InvalidConfig, "source and target library are the same");

    auto depfiles = depfile::discover(workspace);
    if (depfiles.empty())
        throw Error(ErrorCode::NoDependencyFile,
                    "no requirements*.txt or pyproject.toml in " + workspace.string(), workspace.string());

    PreparedMigration prep;
    std::vector<std::string> searched;
    for (const auto& df : depfiles) {
        searched.push_back(df.path);
        for (const auto& w : df.warnings)
            prep.warnings.push_back(w);
        if (!df.find(options.source))
            continue;
        prep.files.push_back(PristineFile{df.path, diff::FileKind::Dependency, false, false, {}});
        prep.pristine[df.path] = df.raw;
    }
    if (prep.files.empty()) {
        std::string where;
        for (const auto& s : searched)
            where += (where.empty() ? "" : ", ") + s;
        throw Error(ErrorCode::SourceNotDeclared, options.source + " is not declared in " + where, options.source);
    }

    prep.import_name = scanner::import_name_for(options.source, options.import_names);
    scanner::ScanOptions scan{options.scan_excludes, workdir};
    for (auto& rf : scanner::find_relevant_files(workspace, prep.import_name, scan, &prep.warnings)) {
        bool send = !rf.is_test || options.include_tests;
        prep.files.push_back(PristineFile{rf.path, diff::FileKind::Source, rf.is_test, send, rf.import_lines});
        prep.pristine[rf.path] = std::move(rf.content);
    }
    return prep;
}

std::unique_ptr<llm::ChatBackend> make_backend(const MigrationOptions& options)
{
    if (options.mock_llm) {
        try {
            return std::make_unique<llm::MockBackend>(llm::load_transcript(*options.mock_llm));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::IoError)
                throw Error(ErrorCode::InvalidConfig, "cannot read mock transcript " + *options.mock_llm,
                            *options.mock_llm);
            throw;
        }
    }
    return std::make_unique<llm::OpenAiBackend>(options.llm);
}

MigrationSession start_session(SessionStore& store, const MigrationOptions& options, const json& config_origin,
                               bool force)
{
    options.llm.validate();
    if (options.test_command.find("{report}") == std::string::npos)
        throw Error(ErrorCode::InvalidConfig, "test command must contain the {report} placeholder",
                    options.test_command);
    if (options.test_timeout_seconds <= 0)
        throw Error(ErrorCode::InvalidConfig, "test timeout must be positive");
    make_backend(options);

    auto prep = prepare_migration(store.workspace(), options, store.workdir());
    auto session = store.create(options, prep.files, prep.pristine, config_origin, force);
    for (const auto& w : prep.warnings)
        store.log(session, "warning: " + w);
    std::size_t llm_files = std::count_if(prep.files.begin(), prep.files.end(),
                                          [](const PristineFile& f) { return f.send_to_llm; });
    store.log(session, "session " + session.id + ": " + options.source + " -> " + options.target + ", " +
                           std::to_string(llm_files) + " file(s) for the model, import name '" + prep.import_name + "'");
    store.record_event(session, TelemetryEvent{"migration_started",
                                               {{"trigger", options.trigger},
                                                {"source", options.source},
                                                {"target", options.target},
                                                {"model", options.llm.model},
                                                {"mock", options.mock_llm.has_value()},
                                                {"files", llm_files}},
                                               {}});
    return session;
}

const RoundRecord* best_round(const std::vector<RoundRecord>& rounds)
{
    const RoundRecord* best = nullptr;
    for (const auto& r : rounds)
        if (r.kind != RoundKind::Premig && r.accepted && r.report && r.comparison)
            best = &r;
    return best;
}

Pipeline::Pipeline(const SessionStore& store, MigrationSession& session, std::unique_ptr<llm::ChatBackend> backend,
                   ProgressSink progress)
    : store_(store), session_(session), backend_(std::move(backend)), progress_(std::move(progress))
{
}

void Pipeline::note(std::string_view message) const
{
    store_.log(session_, message);
}

llm::ChatBackend& Pipeline::backend()
{
    if (!backend_)
        backend_ = make_backend(session_.options);
    return *backend_;
}

fs::path Pipeline::staging() const
{
    return session_.dir / "staging";
}

void Pipeline::report_progress(std::string round, std::size_t index, std::size_t count, std::string message)
{
    session_.progress = Progress{std::move(round), index, count, std::move(message)};
    store_.save_state(session_);
    if (progress_)
        progress_(session_.progress);
}

void Pipeline::archive(RoundRecord& round, std::vector<RoundRecord>& rounds)
{
    round.finished_at = util::now_iso8601();
    store_.archive_round(session_, round);
    note("archived round " + round.dir_name() + (round.accepted ? "" : " (not kept)"));
    rounds.push_back(round);
    maybe_exit_after(round.kind);
}

harness::TestReport Pipeline::run_suite(const RoundRecord& round)
{
    fs::path shadow = staging() / round.dir_name();
    fs::path report_path = staging() / (round.dir_name() + ".xml");
    std::error_code ec;
    fs::remove_all(shadow, ec);
    copy_tree(session_.workspace, shadow, store_.workdir());
    for (const auto& f : session_.files)
        util::write_file_atomic(shadow / f.path, util::read_file(session_.pristine_path(f.path)));
    for (const auto& [path, content] : round.snapshots)
        util::write_file_atomic(shadow / path, content);

    harness::RunOptions opts;
    opts.command_template = session_.options.test_command;
    opts.timeout = std::chrono::milliseconds(static_cast<long long>(session_.options.test_timeout_seconds * 1000));
    opts.round_label = std::string(to_string(round.kind));
    opts.log = [this](std::string_view s) { note(s); };

    report_progress(opts.round_label, 0, 0, "running tests");
    auto cleanup = [&] {
        fs::remove_all(shadow, ec);
        fs::remove(report_path, ec);
    };
    try {
        auto report = harness::run_tests(shadow, report_path, opts);
        cleanup();
        return report;
    } catch (...) {
        cleanup();
        throw;
    }
}

void Pipeline::compare(RoundRecord& round, const RoundRecord& baseline) const
{
    round.comparison = harness::compare_reports(*baseline.report, *round.report,
                                                harness::CompareOptions{session_.options.strict_compare});
    const auto& c = *round.comparison;
    note("comparison [" + std::string(to_string(round.kind)) + "]: " + std::string(harness::to_string(c.verdict)) +
         ", " + std::to_string(c.regressions.size()) + " regression(s), " + std::to_string(c.missing_passing.size()) +
         " missing passing test(s), " + std::to_string(c.fixes.size()) + " fix(es)");
}

std::optional<RoundRecord> Pipeline::run_premig()
{
    RoundRecord r;
    r.kind = RoundKind::Premig;
    r.index = session_.rounds.size();
    r.started_at = util::now_iso8601();
    try {
        r.report = run_suite(r);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoReportProduced && e.code() != ErrorCode::RunnerNotFound)
            throw;
        r.warnings.push_back(std::string(to_string(e.code())) + ": " + e.what());
        note(std::string("baseline test run failed: ") + e.what());
        return r;
    }
    if (r.report->cases.empty()) {
        r.warnings.push_back("LowConfidence: the baseline test run contains no test cases");
        note("warning: LowConfidence: the baseline test run contains no test cases");
    }
    return r;
}

RoundRecord Pipeline::run_llmmig(const RoundRecord& baseline)
{
    RoundRecord r;
    r.kind = RoundKind::Llmmig;
    r.index = session_.rounds.size();
    r.started_at = util::now_iso8601();
    const auto& opt = session_.options;

    std::vector<const PristineFile*> targets;
    for (const auto& f : session_.files)
        if (f.send_to_llm)
            targets.push_back(&f);

    std::size_t migrated = 0;
    if (!targets.empty()) {
        auto& chat = backend();
        note("llm backend " + chat.name() + ", model " + opt.llm.model + "; system preamble:\n" + llm::system_preamble());
        for (std::size_t k = 0; k < targets.size(); ++k) {
            const auto& f = *targets[k];
            report_progress("llmmig", k + 1, targets.size(), "migrating " + f.path);
            scanner::RelevantFile rf{f.path, f.import_lines, util::read_file(session_.pristine_path(f.path)), f.is_test};
            auto prompt = llm::build_prompt(opt.source, opt.target, rf);
            try {
                auto resp = llm::complete(
                    opt.llm, prompt, chat, [this](std::string_view s) { note(s); }, opt.elision_phrases);
                r.snapshots[f.path] = resp.extracted_code;
                r.files.push_back(FileOutcome{f.path, "migrated", resp.elided, std::nullopt, resp.raw});
                if (resp.elided)
                    note("elision marker detected in " + f.path);
                ++migrated;
            } catch (const Error& e) {
                std::string w = f.path + " left unmigrated: " + std::string(to_string(e.code())) + ": " + e.what();
                r.files.push_back(FileOutcome{f.path, "unmigrated", false, w, std::nullopt});
                r.warnings.push_back(w);
                note("warning: " + w);
            }
        }
    }
    if (!targets.empty() && migrated == 0) {
        r.warnings.push_back("every relevant file failed to migrate");
        return r;
    }

    for (const auto& f : session_.files) {
        if (f.kind != diff::FileKind::Dependency)
            continue;
        try {
            auto df = depfile::parse_dependency_file(f.path, util::read_file(session_.pristine_path(f.path)));
            r.snapshots[f.path] = depfile::rewrite_dependency(df, opt.source, opt.target, opt.target_spec);
            r.files.push_back(FileOutcome{f.path, "rewritten", false, std::nullopt, std::nullopt});
        } catch (const Error& e) {
            std::string w = f.path + " not rewritten: " + e.what();
            r.files.push_back(FileOutcome{f.path, "unmigrated", false, w, std::nullopt});
            r.warnings.push_back(w);
        }
    }

    try {
        r.report = run_suite(r);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoReportProduced && e.code() != ErrorCode::RunnerNotFound)
            throw;
        r.warnings.push_back(std::string(to_string(e.code())) + ": " + e.what());
        harness::TestReport empty;
        empty.round_label = "llmmig";
        empty.synthesized = true;
        empty.started_at = empty.finished_at = util::now_iso8601();
        r.report = std::move(empty);
    }
    compare(r, baseline);
    return r;
}

std::optional<RoundRecord> Pipeline::run_reinclude(const RoundRecord& baseline, const RoundRecord& incumbent)
{
    std::vector<std::string> elided;
    for (const auto& f : incumbent.files)
        if (f.elided && incumbent.snapshots.count(f.path))
            elided.push_back(f.path);
    if (elided.empty()) {
        note("reinclude skipped: no elided output");
        return std::nullopt;
    }

    RoundRecord r;
    r.kind = RoundKind::Reinclude;
    r.index = session_.rounds.size();
    r.started_at = util::now_iso8601();
    r.snapshots = incumbent.snapshots;
    bool changed = false;
    for (std::size_t k = 0; k < elided.size(); ++k) {
        const auto& path = elided[k];
        report_progress("reinclude", k + 1, elided.size(), "splicing " + path);
        try {
            auto spliced = postprocess::reinclude(util::read_file(session_.pristine_path(path)),
                                                  incumbent.snapshots.at(path), session_.options.elision_phrases);
            if (spliced != r.snapshots[path]) {
                r.snapshots[path] = std::move(spliced);
                changed = true;
            }
            r.files.push_back(FileOutcome{path, "reincluded", false, std::nullopt, std::nullopt});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SpliceAmbiguous)
                throw;
            std::string w = path + " kept as migrated: " + std::string(to_string(e.code())) + ": " + e.what();
            r.files.push_back(FileOutcome{path, "reverted", true, w, std::nullopt});
            r.warnings.push_back(w);
            note("warning: " + w);
        }
    }
    if (!changed) {
        r.accepted = false;
        return r;
    }
    try {
        r.report = run_suite(r);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoReportProduced && e.code() != ErrorCode::RunnerNotFound)
            throw;
        r.warnings.push_back(std::string(to_string(e.code())) + ": " + e.what());
        r.accepted = false;
        return r;
    }
    compare(r, baseline);
    r.accepted = score_of(r) <= score_of(incumbent);
    return r;
}

std::optional<RoundRecord> Pipeline::run_asyncfix(const RoundRecord& baseline, const RoundRecord& incumbent)
{
    std::vector<std::string> candidates;
    for (const auto& [path, content] : incumbent.snapshots) {
        const PristineFile* pf = session_.file(path);
        if (pf && pf->kind == diff::FileKind::Source && !postprocess::sync_defs_with_await(content).empty())
            candidates.push_back(path);
    }
    if (candidates.empty()) {
        note("asyncfix skipped: no await inside a sync def");
        return std::nullopt;
    }

    RoundRecord r;
    r.kind = RoundKind::Asyncfix;
    r.index = session_.rounds.size();
    r.started_at = util::now_iso8601();
    r.snapshots = incumbent.snapshots;
    bool changed = false;
    fs::path check_root = staging() / "syntax";
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto& path = candidates[k];
        report_progress("asyncfix", k + 1, candidates.size(), "adding async to " + path);
        auto fix = postprocess::add_async(incumbent.snapshots.at(path));

        fs::path probe = fs::absolute(check_root / path);
        util::write_file_atomic(probe, fix.code);
        std::string cmd = session_.options.syntax_check_command;
        std::string quoted = util::shell_quote(probe.string());
        cmd = cmd.find("{file}") == std::string::npos ? cmd + " " + quoted : util::replace_all(cmd, "{file}", quoted);
        auto res = process::run_shell(cmd, check_root, std::chrono::seconds(60));
        std::error_code ec;
        fs::remove_all(check_root, ec);

        std::string lines;
        for (auto ln : fix.rewritten_lines)
            lines += (lines.empty() ? "" : ",") + std::to_string(ln);
        if (!res.launched || res.timed_out || res.exit_code != 0) {
            std::string w = path + " kept without async fix: SyntaxCheckFailed: " +
                            std::string(util::trim(res.output.empty() ? "syntax check did not pass" : res.output));
            r.files.push_back(FileOutcome{path, "reverted", false, w, std::nullopt});
            r.warnings.push_back(w);
            note("warning: " + w);
            continue;
        }
        note("async added to " + path + " at line(s) " + lines);
        r.snapshots[path] = std::move(fix.code);
        r.files.push_back(FileOutcome{path, "asyncfixed", false, std::nullopt, std::nullopt});
        changed = true;
    }
    if (!changed) {
        r.accepted = false;
        return r;
    }
    try {
        r.report = run_suite(r);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoReportProduced && e.code() != ErrorCode::RunnerNotFound)
            throw;
        r.warnings.push_back(std::string(to_string(e.code())) + ": " + e.what());
        r.accepted = false;
        return r;
    }
    compare(r, baseline);
    r.accepted = score_of(r) <= score_of(incumbent);
    return r;
}

MigrationVerdict Pipeline::finalize(const std::vector<RoundRecord>& rounds, bool aborted, std::string reason)
{
    MigrationVerdict v;
    ReviewSet review;
    const RoundRecord* best = aborted ? nullptr : best_round(rounds);
    if (!best) {
        v.status = VerdictStatus::Aborted;
        v.reason = reason.empty() ? "no round produced a usable result" : std::move(reason);
    } else {
        v.final_round = best->kind;
        v.final_round_index = best->index;
        const auto& c = *best->comparison;
        v.status = c.verdict == harness::Verdict::Clean ? VerdictStatus::Clean : VerdictStatus::Regressed;
        v.regressions = c.regressions;
        v.regressions.insert(v.regressions.end(), c.missing_passing.begin(), c.missing_passing.end());
        review = build_review_set(session_, best->snapshots, best->index);
    }
    save_review(session_, review);
    session_.verdict = v;
    std::error_code ec;
    fs::remove_all(staging(), ec);

    std::string summary = "verdict: " + std::string(to_string(v.status));
    if (v.final_round)
        summary += " (round " + std::string(to_string(*v.final_round)) + ")";
    if (!v.reason.empty())
        summary += ": " + v.reason;
    note(summary);
    if (v.status == VerdictStatus::Regressed)
        note("warning: " + std::to_string(v.regressions.size()) +
             " previously passing test(s) no longer pass; open the test results before applying");
    report_progress("done", 0, 0, summary);
    store_.set_state(session_, v.status == VerdictStatus::Aborted ? SessionState::Aborted : SessionState::AwaitingReview);
    store_.release_lock(session_.id);
    return v;
}

MigrationVerdict Pipeline::run()
{
    std::vector<RoundRecord> rounds;
    try {
        rounds = store_.load_rounds(session_);
        store_.set_state(session_, SessionState::Running);

        if (!find_round(rounds, RoundKind::Premig)) {
            auto r = run_premig();
            archive(*r, rounds);
        }
        RoundRecord baseline = *find_round(rounds, RoundKind::Premig);
        if (!baseline.report)
            return finalize(rounds, true,
                            baseline.warnings.empty() ? "baseline test run produced no report" : baseline.warnings.front());

        if (!find_round(rounds, RoundKind::Llmmig)) {
            auto r = run_llmmig(baseline);
            archive(r, rounds);
        }
        RoundRecord llmmig = *find_round(rounds, RoundKind::Llmmig);
        if (!llmmig.report)
            return finalize(rounds, true, llmmig.warnings.empty() ? "llmmig produced no result" : llmmig.warnings.back());
        if (!regressed(llmmig))
            return finalize(rounds, false, {});

        if (!find_round(rounds, RoundKind::Reinclude) && !find_round(rounds, RoundKind::Asyncfix)) {
            if (auto r = run_reinclude(baseline, llmmig))
                archive(*r, rounds);
        }
        RoundRecord incumbent = *best_round(rounds);
        if (regressed(incumbent) && !find_round(rounds, RoundKind::Asyncfix)) {
            if (auto r = run_asyncfix(baseline, incumbent))
                archive(*r, rounds);
        }
        return finalize(rounds, false, {});
    } catch (const Error& e) {
        note(std::string("pipeline aborted: ") + std::string(to_string(e.code())) + ": " + e.what());
        if (session_.state == SessionState::Done || session_.state == SessionState::Aborted)
            throw;
        return finalize(rounds, true, std::string(to_string(e.code())) + ": " + e.what());
    }
}

bool resume_if_interrupted(const SessionStore& store, MigrationSession& session, ProgressSink progress)
{
    if (!store.interrupted(session))
        return false;
    store.acquire_lock(session.id, false);
    store.log(session, "resuming interrupted session " + session.id);
    Pipeline(store, session, nullptr, std::move(progress)).run();
    return true;
}

} // namespace migmate
