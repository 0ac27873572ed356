#include "migmate/diff.hpp"

#include "migmate/error.hpp"
#include "migmate/util.hpp"

#include <algorithm>
#include <unordered_map>

namespace migmate::diff {

std::string_view to_string(HunkState s)
{
    switch (s) {
    case HunkState::Pending: return "pending";
    case HunkState::Accepted: return "accepted";
    case HunkState::Rejected: return "rejected";
    case HunkState::Applied: return "applied";
    }
    return "pending";
}

HunkState hunk_state_from_string(std::string_view s)
{
    if (s == "accepted")
        return HunkState::Accepted;
    if (s == "rejected")
        return HunkState::Rejected;
    if (s == "applied")
        return HunkState::Applied;
    return HunkState::Pending;
}

bool transition_allowed(HunkState from, HunkState to)
{
    if (from == HunkState::Pending)
        return to == HunkState::Accepted || to == HunkState::Rejected || to == HunkState::Applied;
    if (from == HunkState::Accepted)
        return to == HunkState::Applied;
    return false;
}

std::string_view to_string(FileKind k)
{
    return k == FileKind::Source ? "source" : "dependency";
}

std::string Hunk::header() const
{
    auto range = [](std::size_t start, std::size_t len) {
        return len == 1 ? std::to_string(start) : std::to_string(start) + "," + std::to_string(len);
    };
    return "@@ -" + range(old_start, old_len) + " +" + range(new_start, new_len) + " @@";
}

std::string Hunk::added_text() const
{
    std::string out;
    for (const auto& l : lines)
        if (l.kind == LineKind::Added)
            out += l.text + (l.no_newline ? "" : "\n");
    return out;
}

std::string Hunk::removed_text() const
{
    std::string out;
    for (const auto& l : lines)
        if (l.kind == LineKind::Removed)
            out += l.text + (l.no_newline ? "" : "\n");
    return out;
}

const Hunk* FileDiff::find(std::string_view id) const
{
    for (const auto& h : hunks)
        if (h.id == id)
            return &h;
    return nullptr;
}

Hunk* FileDiff::find(std::string_view id)
{
    for (auto& h : hunks)
        if (h.id == id)
            return &h;
    return nullptr;
}

std::string normalize_eol(std::string_view text, std::string* eol)
{
    std::size_t crlf = 0, lf = 0;
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            ++crlf;
            continue;
        }
        if (text[i] == '\n')
            ++lf;
        out += text[i];
    }
    if (eol)
        *eol = crlf > 0 && crlf * 2 >= lf ? "\r\n" : "\n";
    return out;
}

std::string restore_eol(std::string_view text, std::string_view eol)
{
    if (eol == "\n")
        return std::string(text);
    return util::replace_all(std::string(text), "\n", eol);
}

namespace {

enum class Op { Equal, Delete, Insert };

struct Step {
    Op op;
    std::size_t old_i; // valid for Equal/Delete
    std::size_t new_i; // valid for Equal/Insert
};

// Myers O(ND) shortest edit script between a and b (interned line ids).
std::vector<Step> myers(const std::vector<int>& a, const std::vector<int>& b)
{
    const long n = static_cast<long>(a.size());
    const long m = static_cast<long>(b.size());

    // Common prefix and suffix are matched directly.
    long pre = 0;
    while (pre < n && pre < m && a[pre] == b[pre])
        ++pre;
    long suf = 0;
    while (suf < n - pre && suf < m - pre && a[n - 1 - suf] == b[m - 1 - suf])
        ++suf;

    std::vector<Step> steps;
    for (long i = 0; i < pre; ++i)
        steps.push_back({Op::Equal, static_cast<std::size_t>(i), static_cast<std::size_t>(i)});

    const long N = n - pre - suf;
    const long M = m - pre - suf;
    auto A = [&](long i) { return a[pre + i]; };
    auto B = [&](long j) { return b[pre + j]; };

    std::vector<Step> middle;
    constexpr long kMaxEdits = 6000;
    if (N > 0 || M > 0) {
        const long max = N + M;
        const long limit = std::min(max, kMaxEdits);
        const long off = max + 1;
        std::vector<long> v(static_cast<std::size_t>(2 * max + 3), 0);
        std::vector<std::vector<long>> trace;
        long found = -1;
        for (long d = 0; d <= limit; ++d) {
            trace.push_back(v);
            for (long k = -d; k <= d; k += 2) {
                long x;
                if (k == -d || (k != d && v[off + k - 1] < v[off + k + 1]))
                    x = v[off + k + 1];
                else
                    x = v[off + k - 1] + 1;
                long y = x - k;
                while (x < N && y < M && A(x) == B(y)) {
                    ++x;
                    ++y;
                }
                v[off + k] = x;
                if (x >= N && y >= M) {
                    found = d;
                    break;
                }
            }
            if (found >= 0)
                break;
        }
        if (found < 0) {
            // Too many edits to trace: replace the middle wholesale.
            for (long i = 0; i < N; ++i)
                middle.push_back({Op::Delete, static_cast<std::size_t>(pre + i), 0});
            for (long j = 0; j < M; ++j)
                middle.push_back({Op::Insert, 0, static_cast<std::size_t>(pre + j)});
        } else {
            long x = N, y = M;
            for (long d = found; d > 0; --d) {
                const auto& vd = trace[static_cast<std::size_t>(d)];
                long k = x - y;
                long prev_k;
                if (k == -d || (k != d && vd[off + k - 1] < vd[off + k + 1]))
                    prev_k = k + 1;
                else
                    prev_k = k - 1;
                long prev_x = vd[off + prev_k];
                long prev_y = prev_x - prev_k;
                while (x > prev_x && y > prev_y) {
                    --x;
                    --y;
                    middle.push_back({Op::Equal, static_cast<std::size_t>(pre + x), static_cast<std::size_t>(pre + y)});
                }
                if (x == prev_x) {
                    --y;
                    middle.push_back({Op::Insert, 0, static_cast<std::size_t>(pre + y)});
                } else {
                    --x;
                    middle.push_back({Op::Delete, static_cast<std::size_t>(pre + x), 0});
                }
            }
            while (x > 0 && y > 0) {
                --x;
                --y;
                middle.push_back({Op::Equal, static_cast<std::size_t>(pre + x), static_cast<std::size_t>(pre + y)});
            }
            std::reverse(middle.begin(), middle.end());
        }
    }

    // Within each change run, deletions precede insertions.
    for (std::size_t i = 0; i < middle.size();) {
        if (middle[i].op == Op::Equal) {
            steps.push_back(middle[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < middle.size() && middle[j].op != Op::Equal)
            ++j;
        for (std::size_t t = i; t < j; ++t)
            if (middle[t].op == Op::Delete)
                steps.push_back(middle[t]);
        for (std::size_t t = i; t < j; ++t)
            if (middle[t].op == Op::Insert)
                steps.push_back(middle[t]);
        i = j;
    }

    for (long i = 0; i < suf; ++i)
        steps.push_back({Op::Equal, static_cast<std::size_t>(n - suf + i), static_cast<std::size_t>(m - suf + i)});

    // Fill in the positions that the op kinds leave implicit.
    std::size_t oi = 0, ni = 0;
    for (auto& s : steps) {
        switch (s.op) {
        case Op::Equal: s.old_i = oi++; s.new_i = ni++; break;
        case Op::Delete: s.old_i = oi++; s.new_i = ni; break;
        case Op::Insert: s.old_i = oi; s.new_i = ni++; break;
        }
    }
    return steps;
}

HunkLine make_line(LineKind kind, const std::string& raw)
{
    HunkLine l;
    l.kind = kind;
    if (!raw.empty() && raw.back() == '\n') {
        l.text = raw.substr(0, raw.size() - 1);
    } else {
        l.text = raw;
        l.no_newline = true;
    }
    return l;
}

std::string line_text(const HunkLine& l)
{
    return l.no_newline ? l.text : l.text + "\n";
}

} // namespace

std::vector<Hunk> compute_diff(std::string_view original, std::string_view migrated, std::size_t context,
                               std::string_view path)
{
    auto old_lines = util::split_lines_keep(original);
    auto new_lines = util::split_lines_keep(migrated);
    std::unordered_map<std::string, int> ids;
    auto intern = [&](const std::vector<std::string>& lines) {
        std::vector<int> out;
        out.reserve(lines.size());
        for (const auto& l : lines)
            out.push_back(ids.emplace(l, static_cast<int>(ids.size())).first->second);
        return out;
    };
    auto a = intern(old_lines);
    auto b = intern(new_lines);
    auto steps = myers(a, b);

    std::vector<std::size_t> changes;
    for (std::size_t i = 0; i < steps.size(); ++i)
        if (steps[i].op != Op::Equal)
            changes.push_back(i);

    std::vector<Hunk> hunks;
    std::size_t c = 0;
    while (c < changes.size()) {
        std::size_t first = changes[c];
        std::size_t last = first;
        while (c + 1 < changes.size() && changes[c + 1] - last - 1 <= 2 * context) {
            ++c;
            last = changes[c];
        }
        ++c;
        std::size_t begin = first >= context ? first - context : 0;
        std::size_t end = std::min(steps.size(), last + 1 + context);

        Hunk h;
        h.old_index = steps[begin].old_i;
        h.new_index = steps[begin].new_i;
        for (std::size_t i = begin; i < end; ++i) {
            const auto& s = steps[i];
            switch (s.op) {
            case Op::Equal:
                h.lines.push_back(make_line(LineKind::Context, old_lines[s.old_i]));
                ++h.old_len;
                ++h.new_len;
                break;
            case Op::Delete:
                h.lines.push_back(make_line(LineKind::Removed, old_lines[s.old_i]));
                ++h.old_len;
                break;
            case Op::Insert:
                h.lines.push_back(make_line(LineKind::Added, new_lines[s.new_i]));
                ++h.new_len;
                break;
            }
        }
        h.old_start = h.old_len == 0 ? h.old_index : h.old_index + 1;
        h.new_start = h.new_len == 0 ? h.new_index : h.new_index + 1;
        h.id = std::string(path) + ":" + std::to_string(hunks.size());
        hunks.push_back(std::move(h));
    }
    return hunks;
}

FileDiff make_file_diff(std::string path, std::string_view original_bytes, std::string_view migrated_bytes,
                        FileKind kind, std::size_t context)
{
    FileDiff fd;
    fd.path = std::move(path);
    fd.kind = kind;
    fd.original = normalize_eol(original_bytes, &fd.eol);
    fd.migrated = normalize_eol(migrated_bytes);
    fd.hunks = compute_diff(fd.original, fd.migrated, context, fd.path);
    return fd;
}

std::string apply_hunks(std::string_view base, const std::vector<Hunk>& hunks, const std::set<std::string>& selected,
                        std::string_view path)
{
    for (const auto& id : selected) {
        bool known = std::any_of(hunks.begin(), hunks.end(), [&](const Hunk& h) { return h.id == id; });
        if (!known)
            throw Error(ErrorCode::UnknownHunkId, "unknown hunk id " + id, id);
    }
    auto lines = util::split_lines_keep(base);
    std::string out;
    std::size_t cursor = 0;
    auto mismatch = [&](const std::string& why) {
        return Error(ErrorCode::ContextMismatch, std::string(path) + ": " + why, std::string(path));
    };
    for (const auto& h : hunks) {
        if (h.old_index < cursor || h.old_index > lines.size())
            throw mismatch("hunk " + h.id + " is out of range");
        for (; cursor < h.old_index; ++cursor)
            out += lines[cursor];
        std::size_t pos = h.old_index;
        for (const auto& l : h.lines) {
            if (l.kind == LineKind::Added)
                continue;
            if (pos >= lines.size() || lines[pos] != line_text(l))
                throw mismatch("content at line " + std::to_string(pos + 1) + " no longer matches hunk " + h.id);
            ++pos;
        }
        bool take = selected.count(h.id) > 0;
        for (const auto& l : h.lines) {
            if (l.kind == LineKind::Context || (take ? l.kind == LineKind::Added : l.kind == LineKind::Removed))
                out += line_text(l);
        }
        cursor = pos;
    }
    for (; cursor < lines.size(); ++cursor)
        out += lines[cursor];
    return out;
}

std::string apply_selection(const FileDiff& file, const std::set<std::string>& selected)
{
    return apply_hunks(file.original, file.hunks, selected, file.path);
}

std::string to_unified(const FileDiff& file)
{
    if (file.hunks.empty())
        return {};
    std::string out = "--- a/" + file.path + "\n+++ b/" + file.path + "\n";
    for (const auto& h : file.hunks) {
        out += h.header() + "\n";
        for (const auto& l : h.lines) {
            out += l.kind == LineKind::Context ? ' ' : l.kind == LineKind::Removed ? '-' : '+';
            out += l.text + "\n";
            if (l.no_newline)
                out += "\\ No newline at end of file\n";
        }
    }
    return out;
}

} // namespace migmate::diff
