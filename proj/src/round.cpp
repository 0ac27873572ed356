#include "migmate/round.hpp"

#include "migmate/error.hpp"

#include <cstdio>

using json = nlohmann::json;

namespace migmate {

std::string_view to_string(RoundKind k)
{
    switch (k) {
    case RoundKind::Premig: return "premig";
    case RoundKind::Llmmig: return "llmmig";
    case RoundKind::Reinclude: return "reinclude";
    case RoundKind::Asyncfix: return "asyncfix";
    }
    return "premig";
}

RoundKind round_kind_from_string(std::string_view s)
{
    if (s == "premig")
        return RoundKind::Premig;
    if (s == "llmmig")
        return RoundKind::Llmmig;
    if (s == "reinclude")
        return RoundKind::Reinclude;
    if (s == "asyncfix")
        return RoundKind::Asyncfix;
    throw Error(ErrorCode::CorruptSession, "unknown round kind '" + std::string(s) + "'");
}

std::string RoundRecord::dir_name() const
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02zu-", index);
    return buf + std::string(to_string(kind));
}

const FileOutcome* RoundRecord::outcome(std::string_view path) const
{
    for (const auto& f : files)
        if (f.path == path)
            return &f;
    return nullptr;
}

json notes_json(const RoundRecord& r)
{
    json files = json::array();
    for (const auto& f : r.files) {
        json row{{"path", f.path}, {"status", f.status}, {"elided", f.elided}};
        if (f.warning)
            row["warning"] = *f.warning;
        if (f.raw_response)
            row["raw_response"] = *f.raw_response;
        files.push_back(std::move(row));
    }
    return json{
        {"schema", 1},
        {"kind", std::string(to_string(r.kind))},
        {"index", r.index},
        {"accepted", r.accepted},
        {"has_report", r.report.has_value()},
        {"report_synthesized", r.report && r.report->synthesized},
        {"exit_code", r.report ? json(r.report->exit_code) : json(nullptr)},
        {"files", std::move(files)},
        {"warnings", r.warnings},
        {"started_at", r.started_at},
        {"finished_at", r.finished_at},
    };
}

std::string_view to_string(VerdictStatus s)
{
    switch (s) {
    case VerdictStatus::Clean: return "clean";
    case VerdictStatus::Regressed: return "regressed";
    case VerdictStatus::Aborted: return "aborted";
    }
    return "aborted";
}

VerdictStatus verdict_status_from_string(std::string_view s)
{
    if (s == "clean")
        return VerdictStatus::Clean;
    if (s == "regressed")
        return VerdictStatus::Regressed;
    if (s == "aborted")
        return VerdictStatus::Aborted;
    throw Error(ErrorCode::CorruptSession, "unknown verdict '" + std::string(s) + "'");
}

json to_json(const MigrationVerdict& v)
{
    return json{
        {"status", std::string(to_string(v.status))},
        {"final_round", v.final_round ? json(std::string(to_string(*v.final_round))) : json(nullptr)},
        {"final_round_index", v.final_round_index ? json(*v.final_round_index) : json(nullptr)},
        {"regressions", v.regressions},
        {"reason", v.reason},
    };
}

MigrationVerdict verdict_from_json(const json& j)
{
    MigrationVerdict v;
    v.status = verdict_status_from_string(j.at("status").get<std::string>());
    if (j.contains("final_round") && j["final_round"].is_string())
        v.final_round = round_kind_from_string(j["final_round"].get<std::string>());
    if (j.contains("final_round_index") && j["final_round_index"].is_number())
        v.final_round_index = j["final_round_index"].get<std::size_t>();
    v.regressions = j.value("regressions", std::vector<std::string>{});
    v.reason = j.value("reason", std::string{});
    return v;
}

} // namespace migmate
